#include "flipsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "flipsim/csv.hpp"

namespace flipsim {

bool Curve::valid() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].n < 1) return false;
        if (i > 0 && !(points[i].x > points[i - 1].x)) return false;
    }
    return true;
}

double discounted_return(std::span<const double> rewards, double gamma) {
    double total = 0.0;
    double discount = 1.0;
    for (double r : rewards) {
        total += discount * r;
        discount *= gamma;
    }
    return total;
}

std::vector<double> sliding_window_smooth(std::span<const double> series, std::size_t window) {
    if (window < 1) throw std::invalid_argument("smoothing window must be >= 1");
    std::vector<double> out;
    out.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        // Summing the window directly keeps every output independent of
        // the accumulated rounding of earlier elements.
        const std::size_t first = i + 1 >= window ? i + 1 - window : 0;
        double sum = 0.0;
        for (std::size_t j = first; j <= i; ++j) sum += series[j];
        out.push_back(sum / static_cast<double>(i + 1 - first));
    }
    return out;
}

std::vector<double> true_returns(std::span<const EpisodeRecord> records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.true_return);
    return out;
}

namespace {

CurvePoint summarize(double x, std::span<const double> values) {
    CurvePoint p;
    p.x = x;
    p.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    p.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - p.mean) * (v - p.mean);
        p.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return p;
}

}  // namespace

Curve aggregate_series(std::span<const std::vector<double>> replicates) {
    Curve curve;
    if (replicates.empty()) return curve;
    const std::size_t len = replicates.front().size();
    for (std::size_t r = 1; r < replicates.size(); ++r) {
        if (replicates[r].size() != len) {
            throw std::invalid_argument("replicate " + std::to_string(r) + " has " +
                                        std::to_string(replicates[r].size()) +
                                        " episodes, replicate 0 has " + std::to_string(len));
        }
    }
    std::vector<double> column(replicates.size());
    curve.points.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t r = 0; r < replicates.size(); ++r) column[r] = replicates[r][i];
        curve.points.push_back(summarize(static_cast<double>(i), column));
    }
    return curve;
}

Curve aggregate(std::span<const std::vector<EpisodeRecord>> replicates, std::size_t window) {
    std::vector<std::vector<double>> smoothed;
    smoothed.reserve(replicates.size());
    for (const auto& rep : replicates) {
        smoothed.push_back(sliding_window_smooth(true_returns(rep), window));
    }
    return aggregate_series(smoothed);
}

Curve performance_vs_cost(std::span<const EpisodeRecord> records, std::size_t window, int onset) {
    const auto smoothed = sliding_window_smooth(true_returns(records), window);
    Curve curve;
    const std::size_t first = static_cast<std::size_t>(std::max(onset, 0));
    std::size_t i = first;
    while (i < records.size()) {
        std::size_t j = i;
        while (j < records.size() &&
               records[j].cumulative_attacks == records[i].cumulative_attacks) {
            ++j;
        }
        curve.points.push_back(summarize(static_cast<double>(records[i].cumulative_attacks),
                                         std::span<const double>(smoothed).subspan(i, j - i)));
        i = j;
    }
    return curve;
}

namespace {

std::optional<double> interpolate(const Curve& c, double x) {
    const auto& pts = c.points;
    if (pts.empty() || x < pts.front().x || x > pts.back().x) return std::nullopt;
    const auto hi = std::lower_bound(pts.begin(), pts.end(), x,
                                     [](const CurvePoint& p, double v) { return p.x < v; });
    if (hi->x == x || hi == pts.begin()) return hi->mean;
    const auto lo = hi - 1;
    const double t = (x - lo->x) / (hi->x - lo->x);
    return lo->mean + t * (hi->mean - lo->mean);
}

}  // namespace

Curve aggregate_cost_curves(std::span<const Curve> curves, double grid_step) {
    if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
    Curve out;
    double x_max = -1.0;
    for (const auto& c : curves) {
        if (!c.points.empty()) x_max = std::max(x_max, c.points.back().x);
    }
    if (x_max < 0.0) return out;
    std::vector<double> ys;
    for (std::size_t k = 0;; ++k) {
        const double x = static_cast<double>(k) * grid_step;
        if (x > x_max) break;
        ys.clear();
        for (const auto& c : curves) {
            if (const auto y = interpolate(c, x)) ys.push_back(*y);
        }
        if (!ys.empty()) out.points.push_back(summarize(x, ys));
    }
    return out;
}

Curve performance_vs_mean_cost(std::span<const std::vector<EpisodeRecord>> replicates,
                               std::size_t window, int onset) {
    Curve out;
    if (replicates.empty()) return out;
    const Curve returns = aggregate(replicates, window);
    const std::size_t first = static_cast<std::size_t>(std::max(onset, 0));
    std::vector<double> group;
    double group_x = -1.0;
    for (std::size_t e = first; e < returns.size(); ++e) {
        double x = 0.0;
        for (const auto& rep : replicates) x += static_cast<double>(rep[e].cumulative_attacks);
        x /= static_cast<double>(replicates.size());
        if (!group.empty() && x != group_x) {
            out.points.push_back(summarize(group_x, group));
            group.clear();
        }
        group_x = x;
        group.push_back(returns.points[e].mean);
    }
    if (!group.empty()) out.points.push_back(summarize(group_x, group));
    return out;
}

namespace {

bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

}  // namespace

void write_curve_csv(std::ostream& out, const Curve& curve) {
    out << kCurveCsvHeader << '\n';
    for (const auto& p : curve.points) {
        out << csv::format_double(p.x) << ',' << csv::format_double(p.mean) << ','
            << csv::format_double(p.std) << ',' << p.n << '\n';
    }
}

Curve read_curve_csv(std::istream& in) {
    std::string line;
    if (!read_line(in, line) || line != kCurveCsvHeader) {
        throw std::invalid_argument("curve CSV must start with header '" +
                                    std::string(kCurveCsvHeader) + "'");
    }
    Curve curve;
    while (read_line(in, line)) {
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 4) throw std::invalid_argument("curve CSV row needs 4 fields: " + line);
        curve.points.push_back({csv::parse_double(f[0]), csv::parse_double(f[1]),
                                csv::parse_double(f[2]),
                                static_cast<std::size_t>(csv::parse_int(f[3]))});
    }
    return curve;
}

void write_records_csv(std::ostream& out, std::span<const EpisodeRecord> records) {
    out << kRecordCsvHeader << '\n';
    for (const auto& r : records) {
        out << r.episode_index << ',' << r.steps_taken << ',' << csv::format_double(r.true_return)
            << ',' << csv::format_double(r.observed_return) << ',' << (r.goal_reached ? 1 : 0)
            << ',' << r.cumulative_attacks << '\n';
    }
}

std::vector<EpisodeRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!read_line(in, line) || line != kRecordCsvHeader) {
        throw std::invalid_argument("record CSV must start with header '" +
                                    std::string(kRecordCsvHeader) + "'");
    }
    std::vector<EpisodeRecord> out;
    while (read_line(in, line)) {
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 6) throw std::invalid_argument("record CSV row needs 6 fields: " + line);
        EpisodeRecord r;
        r.episode_index = static_cast<int>(csv::parse_int(f[0]));
        r.steps_taken = static_cast<int>(csv::parse_int(f[1]));
        r.true_return = csv::parse_double(f[2]);
        r.observed_return = csv::parse_double(f[3]);
        r.goal_reached = csv::parse_int(f[4]) != 0;
        r.cumulative_attacks = static_cast<std::uint64_t>(csv::parse_int(f[5]));
        out.push_back(r);
    }
    return out;
}

}  // namespace flipsim
