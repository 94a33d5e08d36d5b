#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "rrl/emdp.hpp"
#include "rrl/random.hpp"

namespace rrl::dqn {

struct Transition {
    StateId state = 0;
    ActionId action = 0;
    double reward = 0.0;
    StateId next_state = 0;
    bool terminal = false;
};

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity, CounterRng rng = CounterRng{}) : capacity_(capacity), rng_(rng) {
        if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
        items_.reserve(capacity);
    }

    void push(const Transition& t) {
        if (items_.size() < capacity_) {
            items_.push_back(t);
        } else {
            items_[next_] = t;
        }
        next_ = (next_ + 1) % capacity_;
    }

    [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] const Transition& operator[](std::size_t i) const { return items_[i]; }

    /// Slot index of a uniform draw (with replacement).
    std::size_t sample_index() {
        if (items_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
        return rng_.below(items_.size());
    }

    void sample(std::size_t n, std::vector<Transition>& out) {
        out.clear();
        for (std::size_t k = 0; k < n; ++k) out.push_back(items_[sample_index()]);
    }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
    CounterRng rng_;
};

}  // namespace rrl::dqn
