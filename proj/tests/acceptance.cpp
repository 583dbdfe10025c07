#include <cstdio>
#include <cstdlib>
#include <string>

#include "chainlab/acceptance.hpp"

// Usage: acceptance [id ...]; runs all criteria when no id is given.
int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) ids = chainlab::all_criteria();
  int failed = 0;
  chainlab::run_acceptance(ids, [&](const chainlab::CriterionResult& r) {
    std::printf("%s\n", chainlab::criterion_line(r).c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  });
  std::printf("%zu criteria, %d failed\n", ids.size(), failed);
  return failed == 0 ? 0 : 1;
}
