#include "strongenv/time_grid.hpp"

#include <stdexcept>
#include <string>

namespace strongenv {

TimeGrid::TimeGrid(std::vector<double> times, std::vector<double> weights)
    : times_(std::move(times)), weights_(std::move(weights))
{
    if (times_.size() != weights_.size() + 1)
        throw std::invalid_argument("TimeGrid: times must hold one entry per weighted level "
                                    "plus the cemetery time (got " +
                                    std::to_string(times_.size()) + " times for " +
                                    std::to_string(weights_.size()) + " weights)");
    if (weights_.empty())
        throw std::invalid_argument("TimeGrid: at least one weighted level is required");
    for (std::size_t k = 0; k + 1 < times_.size(); ++k)
        if (!(times_[k] < times_[k + 1]))
            throw std::invalid_argument("TimeGrid: times must be strictly increasing (index " +
                                        std::to_string(k) + ")");
    bool any_positive = false;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
        if (!(weights_[k] >= 0.0))
            throw std::invalid_argument("TimeGrid: weight " + std::to_string(k) +
                                        " must be non-negative");
        any_positive = any_positive || weights_[k] > 0.0;
    }
    if (!any_positive)
        throw std::invalid_argument("TimeGrid: at least one weight must be positive");
}

TimeGrid TimeGrid::unit(std::size_t weighted_levels)
{
    std::vector<double> times(weighted_levels + 1);
    for (std::size_t k = 0; k < times.size(); ++k) times[k] = static_cast<double>(k);
    return TimeGrid(std::move(times), std::vector<double>(weighted_levels, 1.0));
}

double TimeGrid::time(int k) const
{
    if (k < 0 || static_cast<std::size_t>(k) >= times_.size())
        throw std::invalid_argument("TimeGrid: time index out of range");
    return times_[static_cast<std::size_t>(k)];
}

double TimeGrid::weight(int k) const
{
    if (k < 0 || static_cast<std::size_t>(k) >= weights_.size())
        throw std::invalid_argument("TimeGrid: weight index out of range");
    return weights_[static_cast<std::size_t>(k)];
}

double TimeGrid::dt(int k) const
{
    if (k < 0 || static_cast<std::size_t>(k) + 1 >= times_.size())
        throw std::invalid_argument("TimeGrid: step index out of range");
    return times_[static_cast<std::size_t>(k) + 1] - times_[static_cast<std::size_t>(k)];
}

int TimeGrid::last_weighted_level() const
{
    for (int k = cemetery_level() - 1; k >= 0; --k)
        if (weights_[static_cast<std::size_t>(k)] > 0.0) return k;
    return -1; // unreachable: the constructor guarantees a positive weight
}

} // namespace strongenv
