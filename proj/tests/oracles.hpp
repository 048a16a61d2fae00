#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library's algorithms.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

/// Counts ordered (viewer, speaker) pairs with viewer != speaker.
inline std::size_t ordered_pairs(std::size_t n)
{
    std::size_t count = 0;
    for (std::size_t viewer = 0; viewer < n; ++viewer) {
        for (std::size_t speaker = 0; speaker < n; ++speaker) {
            if (viewer != speaker) ++count;
        }
    }
    return count;
}

inline std::string lower(std::string s)
{
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

/// Distinct languages of everyone except `speaker`, optionally dropping the
/// speaker's own language.
inline std::size_t unique_required(const std::vector<std::string>& languages, std::size_t speaker, bool filter)
{
    std::set<std::string> seen;
    const auto own = lower(languages[speaker]);
    for (std::size_t i = 0; i < languages.size(); ++i) {
        if (i == speaker) continue;
        const auto l = lower(languages[i]);
        if (filter && l == own) continue;
        seen.insert(l);
    }
    return seen.size();
}

/// Slopes between every pair of points; all equal iff the points are collinear.
inline std::vector<double> pairwise_slopes(const std::vector<std::pair<double, double>>& pts)
{
    std::vector<double> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            out.push_back((pts[j].second - pts[i].second) / (pts[j].first - pts[i].first));
        }
    }
    return out;
}

/// Least squares y = a + b x via raw-sum normal equations and Cramer's rule.
inline std::pair<double, double> normal_equations(const std::vector<double>& x, const std::vector<double>& y)
{
    double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    return {(sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det};
}

/// Root of f on [lo, hi] given a sign change.
inline double bisect(const std::function<double(double)>& f, double lo, double hi)
{
    double flo = f(lo);
    for (int i = 0; i < 300; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct TraceRow {
    double available, start, finish, play;
};

/// Single server, live arrivals every T, constant processing p: event by event.
/// Playback pauses whenever the next segment is not ready.
inline std::vector<TraceRow> single_server_trace(double T, double p, std::size_t segments)
{
    std::vector<TraceRow> rows;
    double server_free = 0.0;
    double playhead = 0.0;
    for (std::size_t k = 0; k < segments; ++k) {
        TraceRow r{};
        r.available = T * static_cast<double>(k + 1);
        r.start = std::max(r.available, server_free);
        r.finish = r.start + p;
        server_free = r.finish;
        r.play = k == 0 ? r.finish : std::max(r.finish, playhead);
        playhead = r.play + T;
        rows.push_back(r);
    }
    return rows;
}

/// E[number of distinct listener languages other than the speaker's] when all
/// n participants draw uniformly from `pool` languages: occupancy distribution
/// of the n-1 listeners by dynamic programming, then subtract the chance the
/// speaker's language is among the occupied ones (m / pool).
inline double expected_k_uniform(std::size_t n, std::size_t pool)
{
    std::vector<double> dist(pool + 1, 0.0);
    dist[0] = 1.0;
    const double L = static_cast<double>(pool);
    for (std::size_t draw = 0; draw + 1 < n; ++draw) {
        std::vector<double> next(pool + 1, 0.0);
        for (std::size_t m = 0; m <= pool; ++m) {
            if (dist[m] == 0.0) continue;
            next[m] += dist[m] * static_cast<double>(m) / L;
            if (m < pool) next[m + 1] += dist[m] * (L - static_cast<double>(m)) / L;
        }
        dist = next;
    }
    double e = 0.0;
    for (std::size_t m = 0; m <= pool; ++m) e += dist[m] * (static_cast<double>(m) - static_cast<double>(m) / L);
    return e;
}

/// Variance of the same quantity: given m occupied languages, k is m - 1 with
/// probability m / pool and m otherwise.
inline double variance_k_uniform(std::size_t n, std::size_t pool)
{
    std::vector<double> dist(pool + 1, 0.0);
    dist[0] = 1.0;
    const double L = static_cast<double>(pool);
    for (std::size_t draw = 0; draw + 1 < n; ++draw) {
        std::vector<double> next(pool + 1, 0.0);
        for (std::size_t m = 0; m <= pool; ++m) {
            next[m] += dist[m] * static_cast<double>(m) / L;
            if (m < pool) next[m + 1] += dist[m] * (L - static_cast<double>(m)) / L;
        }
        dist = next;
    }
    double e = 0.0, e2 = 0.0;
    for (std::size_t m = 0; m <= pool; ++m) {
        const double md = static_cast<double>(m);
        const double hit = md / L;
        e += dist[m] * (hit * (md - 1) + (1 - hit) * md);
        e2 += dist[m] * (hit * (md - 1) * (md - 1) + (1 - hit) * md * md);
    }
    return e2 - e * e;
}

} // namespace oracle
