// Runs acceptance criteria 1-10 and prints one PASS/FAIL line each.
// Exit status 0 iff every criterion passes. Wall times go to stderr.

#include <torsion_lab/acceptance.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  tlab::AcceptanceOptions opt;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    int id = std::atoi(argv[i]);
    if (id < 1 || id > 10) {
      std::cerr << "criterion ids run from 1 to 10\n";
      return 2;
    }
    ids.push_back(id);
  }
  if (ids.empty())
    for (int i = 1; i <= 10; ++i) ids.push_back(i);
  bool all = true;
  for (int id : ids) {
    tlab::CriterionResult r = tlab::run_criterion(id, opt);
    all = all && r.pass;
    std::cout << tlab::summary_line(r) << std::endl;
    std::cerr << "      " << r.seconds << " s (budget " << r.budget << " s)\n";
  }
  return all ? 0 : 1;
}
