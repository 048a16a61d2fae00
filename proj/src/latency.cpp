#include "rtvt/latency.hpp"

#include "rtvt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace rtvt {
namespace {

void require_finite(double v, const char* what)
{
    if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

void check_analytic(double a, double b)
{
    require_finite(a, "a");
    require_finite(b, "b");
    if (a < 0.0) throw DomainError("latency model requires a >= 0");
    if (b < 0.0) throw DomainError("latency model requires b >= 0");
}

} // namespace

const char* to_string(LatencyModel::Form form) noexcept
{
    switch (form) {
    case LatencyModel::Form::affine: return "affine";
    case LatencyModel::Form::logarithmic: return "log";
    case LatencyModel::Form::table: return "table";
    }
    return "unknown";
}

LatencyModel LatencyModel::affine(double a, double b)
{
    check_analytic(a, b);
    if (a == 0.0 && b == 0.0) throw DomainError("affine model with a = b = 0 has zero processing time");
    LatencyModel m;
    m.form_ = Form::affine;
    m.a_ = a;
    m.b_ = b;
    return m;
}

LatencyModel LatencyModel::logarithmic(double a, double b)
{
    check_analytic(a, b);
    if (a == 0.0 && b == 0.0) throw DomainError("logarithmic model with a = b = 0 has zero processing time");
    LatencyModel m;
    m.form_ = Form::logarithmic;
    m.a_ = a;
    m.b_ = b;
    return m;
}

LatencyModel LatencyModel::table(std::vector<TablePoint> points)
{
    if (points.size() < 2) throw DomainError("table model needs at least 2 points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        require_finite(points[i].t, "table t");
        require_finite(points[i].p, "table p");
        if (points[i].t <= 0.0) throw DomainError("table durations must be positive");
        if (points[i].p <= 0.0) throw DomainError("table processing times must be positive");
        if (i > 0 && !(points[i].t > points[i - 1].t)) {
            throw DomainError("table points must be strictly increasing in t");
        }
    }
    LatencyModel m;
    m.form_ = Form::table;
    m.valid_range_ = std::make_pair(points.front().t, points.back().t);
    m.points_ = std::move(points);
    return m;
}

LatencyModel LatencyModel::with_valid_range(double t_min, double t_max) const
{
    if (!(t_min >= 0.0 && t_max >= t_min)) throw DomainError("invalid valid_range");
    if (form_ == Form::table) {
        if (t_min != points_.front().t || t_max != points_.back().t) {
            throw DomainError("table valid_range must match the table's first and last points");
        }
    }
    LatencyModel m = *this;
    m.valid_range_ = std::make_pair(t_min, t_max);
    return m;
}

LatencyModel LatencyModel::with_cold_start_extra(double seconds) const
{
    if (!(seconds >= 0.0) || !std::isfinite(seconds)) throw DomainError("cold_start_extra must be non-negative");
    LatencyModel m = *this;
    m.cold_start_extra_ = seconds;
    return m;
}

double LatencyModel::domain_lower_bound() const
{
    switch (form_) {
    case Form::affine:
        return 0.0;
    case Form::logarithmic:
        return b_ > 0.0 ? std::exp(-a_ / b_) : 0.0;
    case Form::table: {
        const auto& p0 = points_[0];
        const auto& p1 = points_[1];
        const double slope = (p1.p - p0.p) / (p1.t - p0.t);
        return slope > 0.0 ? std::max(0.0, p0.t - p0.p / slope) : 0.0;
    }
    }
    return 0.0;
}

Evaluation evaluate_checked(const LatencyModel& model, double t)
{
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("segment duration must be positive");
    Evaluation out;
    switch (model.form()) {
    case LatencyModel::Form::affine:
        out.p = model.a() + model.b() * t;
        break;
    case LatencyModel::Form::logarithmic:
        out.p = model.a() + model.b() * std::log(t);
        break;
    case LatencyModel::Form::table: {
        const auto& pts = model.points();
        auto hi = std::upper_bound(pts.begin(), pts.end(), t,
                                   [](double v, const TablePoint& pt) { return v < pt.t; });
        std::size_t i1;
        if (hi == pts.begin()) {
            i1 = 1;
        } else if (hi == pts.end()) {
            i1 = pts.size() - 1;
        } else {
            i1 = static_cast<std::size_t>(hi - pts.begin());
        }
        const auto& lo_pt = pts[i1 - 1];
        const auto& hi_pt = pts[i1];
        if (t == hi_pt.t) {
            out.p = hi_pt.p;
        } else if (t == lo_pt.t) {
            out.p = lo_pt.p;
        } else {
            const double slope = (hi_pt.p - lo_pt.p) / (hi_pt.t - lo_pt.t);
            out.p = lo_pt.p + slope * (t - lo_pt.t);
        }
        out.extrapolated = t < pts.front().t || t > pts.back().t;
        break;
    }
    }
    if (!(out.p > 0.0)) throw DomainError("latency model yields non-positive processing time at t=" + std::to_string(t));
    return out;
}

double evaluate(const LatencyModel& model, double t) { return evaluate_checked(model, t).p; }

double tau(const LatencyModel& model, double t) { return evaluate(model, t) / t; }

Regime regime(const LatencyModel& model, double t)
{
    return tau(model, t) > 1.0 ? Regime::system_lag : Regime::real_time;
}

ThroughputPoint ThroughputPoint::make(double t, double p)
{
    if (!(t > 0.0)) throw DomainError("throughput point needs t > 0");
    return ThroughputPoint{t, p, p / t};
}

std::vector<ThroughputPoint> throughput_points(const LatencyModel& model, std::span<const double> grid)
{
    std::vector<ThroughputPoint> out;
    out.reserve(grid.size());
    for (double t : grid) out.push_back(ThroughputPoint::make(t, evaluate(model, t)));
    return out;
}

std::optional<double> t_opt_discrete(std::span<const ThroughputPoint> points)
{
    std::optional<double> best;
    for (const auto& pt : points) {
        if (pt.tau < 1.0 && (!best || pt.t < *best)) best = pt.t;
    }
    return best;
}

std::optional<double> t_opt_continuous(const LatencyModel& model, double t_search_max)
{
    if (!(t_search_max > 0.0)) throw DomainError("search bound must be positive");

    if (model.form() == LatencyModel::Form::affine) {
        if (model.b() >= 1.0) return std::nullopt;
        const double crossing = model.a() / (1.0 - model.b());
        if (crossing >= t_search_max) return std::nullopt;
        return crossing;
    }

    auto above = [&](double t) { return tau(model, t) >= 1.0; };
    if (above(t_search_max)) return std::nullopt;

    // Walk a geometric grid downwards to the last point where tau >= 1, then
    // bisect the bracket. tau < 1 must hold on the whole interval above T.
    const double lower = std::max(model.domain_lower_bound() * (1.0 + 1e-9), 1e-9);
    if (lower >= t_search_max) return lower;
    constexpr int steps = 4096;
    const double ratio = std::pow(lower / t_search_max, 1.0 / steps);
    double prev = t_search_max;
    for (int i = 1; i <= steps; ++i) {
        const double t = i == steps ? lower : t_search_max * std::pow(ratio, i);
        if (above(t)) {
            double lo = t;    // tau >= 1
            double hi = prev; // tau < 1
            for (int iter = 0; iter < 200 && hi - lo > 1e-13 * hi; ++iter) {
                const double mid = 0.5 * (lo + hi);
                (above(mid) ? lo : hi) = mid;
            }
            return hi;
        }
        prev = t;
    }
    return lower;
}

std::vector<DurationStats> MeasurementSet::aggregate() const
{
    std::map<double, std::vector<double>> by_t;
    for (const auto& s : samples) {
        if (!(s.t > 0.0)) throw DomainError("measurement durations must be positive");
        by_t[s.t].push_back(s.p);
    }
    std::vector<DurationStats> out;
    for (const auto& [t, ps] : by_t) {
        DurationStats st;
        st.t = t;
        st.runs = ps.size();
        st.mean = std::accumulate(ps.begin(), ps.end(), 0.0) / static_cast<double>(ps.size());
        if (ps.size() > 1) {
            double ss = 0.0;
            for (double p : ps) ss += (p - st.mean) * (p - st.mean);
            st.stddev = std::sqrt(ss / static_cast<double>(ps.size() - 1));
        }
        out.push_back(st);
    }
    return out;
}

FitResult fit(const MeasurementSet& measurements, FitForm form)
{
    const auto stats = measurements.aggregate();
    if (stats.size() < 2) {
        throw InsufficientDataError("insufficient data: fitting needs at least 2 distinct durations");
    }

    auto feature = [form](double t) { return form == FitForm::affine ? t : std::log(t); };

    // Normal equations for p = a + b*x, centred for conditioning.
    const auto n = static_cast<double>(stats.size());
    double mx = 0.0, my = 0.0;
    for (const auto& s : stats) {
        mx += feature(s.t);
        my += s.mean;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& s : stats) {
        const double dx = feature(s.t) - mx;
        sxx += dx * dx;
        sxy += dx * (s.mean - my);
    }
    const double b = sxy / sxx;
    const double a = my - b * mx;

    LatencyModel model = form == FitForm::affine ? LatencyModel::affine(a, b) : LatencyModel::logarithmic(a, b);
    model = model.with_valid_range(stats.front().t, stats.back().t);

    FitResult out{model, 0.0, {}};
    double ss = 0.0;
    for (const auto& s : stats) {
        const double predicted = a + b * feature(s.t);
        const double r = s.mean - predicted;
        out.residuals.push_back({s.t, s.mean, predicted, r});
        ss += r * r;
    }
    out.rmse = std::sqrt(ss / n);
    return out;
}

FitResult fit_best(const MeasurementSet& measurements)
{
    std::optional<FitResult> affine, logarithmic;
    try {
        affine = fit(measurements, FitForm::affine);
    } catch (const DomainError&) {
    }
    try {
        logarithmic = fit(measurements, FitForm::logarithmic);
    } catch (const DomainError&) {
    }
    if (affine && logarithmic) return logarithmic->rmse < affine->rmse ? *logarithmic : *affine;
    if (affine) return *affine;
    if (logarithmic) return *logarithmic;
    throw DomainError("no model form fits the measurements with non-negative coefficients");
}

LatencyModel table_model(const MeasurementSet& measurements)
{
    const auto stats = measurements.aggregate();
    if (stats.size() < 2) throw InsufficientDataError("insufficient data: table model needs at least 2 distinct durations");
    std::vector<TablePoint> pts;
    for (const auto& s : stats) pts.push_back({s.t, s.mean});
    return LatencyModel::table(std::move(pts));
}

} // namespace rtvt
