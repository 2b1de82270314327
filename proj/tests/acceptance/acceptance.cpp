// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// The exit status counts failures that are not documented as unattainable.

#include "perorbit/repro.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

int main(int argc, char** argv) {
  const std::string subset = argc > 1 ? argv[1] : "all";
  perorbit::ReproOptions opts;
  opts.escape_demo = false;
  if (const char* jobs = std::getenv("PERORBIT_JOBS")) opts.jobs = std::max(1, std::atoi(jobs));
  perorbit::ReproReport report;
  try {
    report = perorbit::run_repro(subset, opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  int unexpected = 0;
  for (const auto& c : report.criteria) {
    std::printf("%s criterion %d: %s (%.2f s, limit %.0f s)%s\n", c.pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                c.seconds, c.time_limit, !c.pass && c.known_unattainable ? " [known unattainable]" : "");
    for (const auto& d : c.details) std::printf("    %s\n", d.c_str());
    if (!c.pass && !c.known_unattainable) ++unexpected;
  }
  std::fflush(stdout);
  return unexpected == 0 ? 0 : 1;
}
