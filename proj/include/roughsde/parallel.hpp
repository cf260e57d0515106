#ifndef ROUGHSDE_PARALLEL_HPP
#define ROUGHSDE_PARALLEL_HPP

#include <Eigen/Core>

#include <functional>

namespace roughsde {

/// Worker count used by data-parallel loops (default 1).
void set_thread_count(int k);
int thread_count();

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on each.
/// Chunk boundaries depend only on n and the thread count; bodies must write
/// to disjoint outputs so results do not depend on scheduling.
void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index, Eigen::Index)>& body);

}  // namespace roughsde

#endif  // ROUGHSDE_PARALLEL_HPP
