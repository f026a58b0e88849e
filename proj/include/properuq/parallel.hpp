#ifndef PROPERUQ_PARALLEL_HPP
#define PROPERUQ_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace properuq {

// Worker-thread cap for blocked loops. 0 restores the hardware default.
// Results of every operation are independent of this setting: work is split
// into fixed-size blocks and block results are combined in block order.
void set_max_threads(int n);
int max_threads();

// Runs fn(begin, end) for consecutive index blocks of at most block_size.
// Each block executes entirely on one worker; blocks may run concurrently,
// so fn must only write to block-local state.
void parallel_for_blocks(std::int64_t count, std::int64_t block_size,
                         const std::function<void(std::int64_t, std::int64_t)>& fn);

// Kahan-compensated accumulator for long reductions.
class KahanSum {
public:
    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace properuq

#endif
