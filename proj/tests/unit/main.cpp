#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdio>

#include "homlab/cell_solver.hpp"

int main(int argc, char** argv) {
  doctest::Context ctx(argc, argv);
  const int rc = ctx.run();
  if (ctx.shouldExit()) return rc;
  const homlab::SolverAudit audit = homlab::solver_audit();
  std::printf("solver audit: %llu solves, %llu flagged, %llu certificate violations\n",
              static_cast<unsigned long long>(audit.solves), static_cast<unsigned long long>(audit.flagged),
              static_cast<unsigned long long>(audit.certificate_violations));
  if (audit.certificate_violations != 0) return rc == 0 ? 3 : rc;
  return rc;
}
