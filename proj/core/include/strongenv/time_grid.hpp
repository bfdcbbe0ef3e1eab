#pragma once

#include <cstddef>
#include <vector>

namespace strongenv {

// Weighted discrete time grid.  Levels 0..T carry strictly increasing real
// times and non-negative Lebesgue weights; level T+1 is the cemetery state.
// The cemetery carries a time (so the step size into it is defined) but no
// weight, and processes on it are pinned to zero by the envelope recursions.
//
// A level with weight zero contributes nothing to the time integral, so an
// envelope is free to drop below the obstacle there; this is what separates
// the weighted envelope from the classical Snell envelope.
class TimeGrid {
public:
    // times.size() must equal weights.size() + 1; the final entry of times is
    // the cemetery time.  Throws std::invalid_argument if times are not
    // strictly increasing, any weight is negative, or no weight is positive.
    TimeGrid(std::vector<double> times, std::vector<double> weights);

    // Unit grid: t_k = k, w_k = 1 for `weighted_levels` levels plus cemetery.
    static TimeGrid unit(std::size_t weighted_levels);

    // Total number of levels including the cemetery (T + 2).
    std::size_t level_count() const { return times_.size(); }
    // Number of non-cemetery levels (T + 1).
    std::size_t weighted_level_count() const { return weights_.size(); }
    int cemetery_level() const { return static_cast<int>(weights_.size()); }

    double time(int k) const;
    double weight(int k) const;
    // Step size t_{k+1} - t_k; defined for k = 0..T (the last step reaches
    // the cemetery time).
    double dt(int k) const;
    bool is_weighted(int k) const
    {
        return k >= 0 && k < cemetery_level() && weights_[static_cast<std::size_t>(k)] > 0.0;
    }
    // Largest k with w_k > 0; the grid invariant guarantees it exists.
    int last_weighted_level() const;

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    std::vector<double> times_;
    std::vector<double> weights_;
};

} // namespace strongenv
