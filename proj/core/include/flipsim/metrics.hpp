#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace flipsim {

struct EpisodeRecord {
    int episode_index = 0;
    int steps_taken = 0;
    double true_return = 0.0;      // discounted, environment rewards
    double observed_return = 0.0;  // discounted, rewards after the channel
    bool goal_reached = false;
    std::uint64_t cumulative_attacks = 0;  // at the end of this episode

    friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

struct CurvePoint {
    double x = 0.0;
    double mean = 0.0;
    double std = 0.0;
    std::size_t n = 0;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Ordered samples; x strictly increasing, n >= 1 everywhere.
struct Curve {
    std::vector<CurvePoint> points;

    bool valid() const;
    std::size_t size() const noexcept { return points.size(); }
    friend bool operator==(const Curve&, const Curve&) = default;
};

/// sum_t gamma^t r_t with t = 0 for the first step's reward.
double discounted_return(std::span<const double> rewards, double gamma);

/// Element i is the mean of the last min(i + 1, window) values.
std::vector<double> sliding_window_smooth(std::span<const double> series, std::size_t window);

std::vector<double> true_returns(std::span<const EpisodeRecord> records);

/// Pointwise mean and sample standard deviation over equally long series.
/// Throws std::invalid_argument naming the first replicate whose length
/// differs from replicate 0.
Curve aggregate_series(std::span<const std::vector<double>> replicates);

/// Smooths each replicate's true return with `window` and aggregates per
/// episode. x is the episode index.
Curve aggregate(std::span<const std::vector<EpisodeRecord>> replicates, std::size_t window = 100);

/// (cumulative attacks, smoothed true return) from episode `onset` onward.
/// Episodes sharing an attack count collapse into one point whose mean/std
/// are taken over those episodes.
Curve performance_vs_cost(std::span<const EpisodeRecord> records, std::size_t window = 100,
                          int onset = 0);

/// Mean of per-replicate cost curves on the grid 0, step, 2 step, ...
/// Each replicate is linearly interpolated and only contributes inside its
/// own x range.
Curve aggregate_cost_curves(std::span<const Curve> curves, double grid_step = 10.0);

/// Cost curve whose x is the replicate-averaged cumulative attack count
/// per episode (from `onset`), y the mean smoothed return.
Curve performance_vs_mean_cost(std::span<const std::vector<EpisodeRecord>> replicates,
                               std::size_t window = 100, int onset = 0);

inline constexpr const char* kCurveCsvHeader = "x,mean,std,n";
inline constexpr const char* kRecordCsvHeader =
    "episode,steps,true_return,observed_return,goal,attacks_cum";

void write_curve_csv(std::ostream& out, const Curve& curve);
Curve read_curve_csv(std::istream& in);

void write_records_csv(std::ostream& out, std::span<const EpisodeRecord> records);
std::vector<EpisodeRecord> read_records_csv(std::istream& in);

}  // namespace flipsim
