#include "gapflow/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace gapflow {

int stage_thread_count() {
  const char* env = std::getenv("GAPFLOW_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  int requested = 1;
  try {
    requested = std::stoi(env);
  } catch (const std::exception&) {
    return 1;
  }
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  return std::clamp(requested, 1, hw);
}

void parallel_for_stages(Index count,
                         const std::function<void(Index, Index)>& body) {
  const Index threads = std::min<Index>(stage_thread_count(), count);
  if (threads <= 1) {
    body(0, count);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(static_cast<std::size_t>(threads));
  const Index chunk = (count + threads - 1) / threads;
  for (Index begin = 0; begin < count; begin += chunk) {
    const Index end = std::min(count, begin + chunk);
    workers.emplace_back([&body, begin, end] { body(begin, end); });
  }
}

}  // namespace gapflow
