#include <cstdio>
#include "homlab/cell_solver.hpp"
int main() {
  using namespace homlab;
  const IntegrandModel m(sample_field(FieldSpec::constant(2, 2.0), 0, 0), 1, false);
  std::printf("%.6f\n", mu_xi(m, Matrix(1, 2, std::vector<double>{1, 0}), 4.0).value);
}
