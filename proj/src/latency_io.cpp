#include "rtvt/latency_io.hpp"

#include "rtvt/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace rtvt {
namespace {

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, bool& ok)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    ok = ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v);
    return v;
}

} // namespace

std::vector<MeasurementSet> read_measurements_csv(std::istream& in, const std::string& source)
{
    std::vector<MeasurementSet> sets;
    std::map<std::string, std::size_t> index;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        const auto trimmed = trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        if (!header_seen) {
            if (trimmed != measurement_csv_header) {
                throw ParseError(source + ":" + std::to_string(line_no) + ": expected header '" +
                                 std::string(measurement_csv_header) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto cells = split_csv(trimmed);
        auto fail = [&](const std::string& why) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": " + why);
        };
        if (cells.size() != 4) fail("expected 4 columns, found " + std::to_string(cells.size()));
        if (cells[0].empty()) fail("empty label");
        bool ok_t = false, ok_p = false;
        const double t = parse_double(cells[1], ok_t);
        const double p = parse_double(cells[3], ok_p);
        int run = 0;
        auto [ptr, ec] = std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), run);
        if (!ok_t || !(t > 0.0)) fail("t_seconds must be a positive number");
        if (ec != std::errc() || ptr != cells[2].data() + cells[2].size() || run < 0) fail("run must be a non-negative integer");
        if (!ok_p || !(p > 0.0)) fail("p_seconds must be a positive number");

        auto [it, inserted] = index.emplace(cells[0], sets.size());
        if (inserted) sets.push_back(MeasurementSet{cells[0], {}});
        sets[it->second].samples.push_back({t, p, run});
    }
    return sets;
}

std::vector<MeasurementSet> load_measurements_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open measurement file: " + path);
    return read_measurements_csv(in, path);
}

void write_measurements_csv_header(std::ostream& out) { out << measurement_csv_header << '\n'; }

void write_measurements_csv_rows(std::ostream& out, const MeasurementSet& set)
{
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << std::setprecision(10);
    for (const auto& s : set.samples) out << set.label << ',' << s.t << ',' << s.run << ',' << s.p << '\n';
    out.flags(flags);
    out.precision(prec);
}

nlohmann::json model_to_json(const LatencyModel& model)
{
    nlohmann::json j;
    j["form"] = to_string(model.form());
    switch (model.form()) {
    case LatencyModel::Form::affine:
    case LatencyModel::Form::logarithmic:
        j["params"] = {{"a", model.a()}, {"b", model.b()}};
        break;
    case LatencyModel::Form::table: {
        auto pts = nlohmann::json::array();
        for (const auto& pt : model.points()) pts.push_back({pt.t, pt.p});
        j["params"] = {{"points", pts}};
        break;
    }
    }
    if (model.valid_range()) {
        j["valid_range"] = {model.valid_range()->first, model.valid_range()->second};
    } else {
        j["valid_range"] = nullptr;
    }
    j["cold_start_extra"] = model.cold_start_extra();
    return j;
}

LatencyModel model_from_json(const nlohmann::json& j)
{
    try {
        if (!j.is_object()) throw ParseError("model must be a JSON object");
        const auto form = j.at("form").get<std::string>();
        const auto& params = j.at("params");
        std::optional<LatencyModel> model;
        if (form == "affine" || form == "log" || form == "logarithmic") {
            const double a = params.at("a").get<double>();
            const double b = params.at("b").get<double>();
            model = form == "affine" ? LatencyModel::affine(a, b) : LatencyModel::logarithmic(a, b);
        } else if (form == "table") {
            std::vector<TablePoint> pts;
            for (const auto& row : params.at("points")) {
                if (!row.is_array() || row.size() != 2) throw ParseError("table points must be [t, p] pairs");
                pts.push_back({row[0].get<double>(), row[1].get<double>()});
            }
            model = LatencyModel::table(std::move(pts));
        } else {
            throw ParseError("unknown model form '" + form + "'");
        }
        if (j.contains("valid_range") && !j["valid_range"].is_null()) {
            const auto& vr = j["valid_range"];
            if (!vr.is_array() || vr.size() != 2) throw ParseError("valid_range must be [t_min, t_max]");
            model = model->with_valid_range(vr[0].get<double>(), vr[1].get<double>());
        }
        if (j.contains("cold_start_extra")) model = model->with_cold_start_extra(j["cold_start_extra"].get<double>());
        return *model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid model JSON: ") + e.what());
    }
}

LatencyModel load_model_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return model_from_json(j);
}

void save_model_json(const LatencyModel& model, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << model_to_json(model).dump(2) << '\n';
}

const std::vector<MeasurementSet>& reference_measurements()
{
    static const std::vector<MeasurementSet> sets = [] {
        auto make = [](std::string label, std::initializer_list<double> means) {
            MeasurementSet s{std::move(label), {}};
            const double durations[] = {1, 2, 3, 5, 8};
            std::size_t i = 0;
            for (double p : means) s.samples.push_back({durations[i++], p, 1});
            return s;
        };
        return std::vector<MeasurementSet>{
            make("T4", {8.99, 10.27, 10.92, 12.01, 12.70}),
            make("RTX4060", {4.52, 4.81, 5.10, 5.68, 6.55}),
            make("A100", {1.87, 2.08, 2.29, 2.71, 3.34}),
        };
    }();
    return sets;
}

LatencyModel reference_table_model(std::string_view label)
{
    std::string wanted;
    for (char c : label) {
        if (c == ' ' || c == '_' || c == '-') continue;
        wanted.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    for (const auto& set : reference_measurements()) {
        if (set.label == wanted) return table_model(set);
    }
    throw ValidationError({"unknown reference hardware '" + std::string(label) + "' (expected A100, RTX4060 or T4)"});
}

} // namespace rtvt
