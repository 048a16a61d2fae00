#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rtvt {

struct TablePoint {
    double t = 0.0; // segment duration, seconds
    double p = 0.0; // processing time, seconds

    friend bool operator==(const TablePoint&, const TablePoint&) = default;
};

/// Processing time p(t) of a pipeline for a segment of t seconds.
///
/// Three parameterizations are supported:
///  - affine:      p(t) = a + b*t
///  - logarithmic: p(t) = a + b*ln(t)
///  - table:       piecewise-linear through measured (t, p) points; outside the
///                 measured range the nearest segment's slope is extended and
///                 the evaluation is flagged as extrapolated.
///
/// Models are immutable once built.
class LatencyModel {
public:
    enum class Form { affine, logarithmic, table };

    static LatencyModel affine(double a, double b);
    static LatencyModel logarithmic(double a, double b);
    static LatencyModel table(std::vector<TablePoint> points);

    Form form() const noexcept { return form_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    const std::vector<TablePoint>& points() const noexcept { return points_; }

    /// Table form: the measured range. Analytic forms: the range of the data
    /// they were fitted on, when known.
    const std::optional<std::pair<double, double>>& valid_range() const noexcept { return valid_range_; }
    LatencyModel with_valid_range(double t_min, double t_max) const;

    /// Seconds added to the first segment a pipeline processes after (re)initialization.
    double cold_start_extra() const noexcept { return cold_start_extra_; }
    LatencyModel with_cold_start_extra(double seconds) const;

    /// Smallest t at which p(t) is still positive (0 when p stays positive down to 0).
    double domain_lower_bound() const;

    friend bool operator==(const LatencyModel&, const LatencyModel&) = default;

private:
    LatencyModel() = default;

    Form form_ = Form::affine;
    double a_ = 0.0;
    double b_ = 0.0;
    std::vector<TablePoint> points_;
    std::optional<std::pair<double, double>> valid_range_;
    double cold_start_extra_ = 0.0;
};

const char* to_string(LatencyModel::Form form) noexcept;

struct Evaluation {
    double p = 0.0;
    bool extrapolated = false;
};

/// Throws DomainError for t <= 0 or when the model yields a non-positive time.
Evaluation evaluate_checked(const LatencyModel& model, double t);
double evaluate(const LatencyModel& model, double t);

/// Reciprocal throughput p(t)/t.
double tau(const LatencyModel& model, double t);

enum class Regime { system_lag, real_time };

/// tau > 1 is the lag regime; everything else is real time.
Regime regime(const LatencyModel& model, double t);

struct ThroughputPoint {
    double t = 0.0;
    double p = 0.0;
    double tau = 0.0;

    static ThroughputPoint make(double t, double p);
};

std::vector<ThroughputPoint> throughput_points(const LatencyModel& model, std::span<const double> grid);

/// Smallest sampled duration with tau < 1, or nullopt.
std::optional<double> t_opt_discrete(std::span<const ThroughputPoint> points);

inline constexpr double default_search_max = 600.0;

/// Smallest t beyond which tau stays below 1 on (t, t_search_max]. Closed form
/// for the affine family, bracketed bisection otherwise. The returned value is
/// the tau == 1 crossing itself, so durations strictly above it are viable.
std::optional<double> t_opt_continuous(const LatencyModel& model, double t_search_max = default_search_max);

// --- measurements and fitting ---------------------------------------------

struct MeasurementSample {
    double t = 0.0;
    double p = 0.0;
    int run = 1;
};

struct DurationStats {
    double t = 0.0;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation, 0 for a single run
    std::size_t runs = 0;
};

struct MeasurementSet {
    std::string label;
    std::vector<MeasurementSample> samples;

    /// Per-duration aggregates sorted by t.
    std::vector<DurationStats> aggregate() const;
};

enum class FitForm { affine, logarithmic };

struct Residual {
    double t = 0.0;
    double observed = 0.0;
    double predicted = 0.0;
    double residual = 0.0; // observed - predicted
};

struct FitResult {
    LatencyModel model;
    double rmse = 0.0;
    std::vector<Residual> residuals;
};

/// Least squares on per-duration means. Throws InsufficientDataError with fewer
/// than two distinct durations, DomainError when the best fit is not a valid
/// model (negative coefficients).
FitResult fit(const MeasurementSet& measurements, FitForm form);

/// Fits both forms and keeps the one with lower RMSE.
FitResult fit_best(const MeasurementSet& measurements);

/// Table model through the per-duration means.
LatencyModel table_model(const MeasurementSet& measurements);

} // namespace rtvt
