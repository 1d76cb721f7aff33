// Student-t vs diagonal normal: TV bounds as the dimension grows, with the
// scales drawn once from [0.95, 1.01]. Prints where the regime flips.
#include <cstdio>
#include <random>
#include <vector>

#include "divbound/student_normal.hpp"

namespace sn = divbound::student_normal;

int main(int argc, char** argv) {
  const double nu = argc > 1 ? std::atof(argv[1]) : 3.0;
  std::mt19937_64 rng(800);
  std::uniform_real_distribution<double> u(0.95, 1.01);
  std::vector<double> d(800);
  for (auto& v : d) v = u(rng);

  std::printf("%6s %12s %12s  %s\n", "n", "lower", "upper", "regime");
  std::string last;
  for (std::size_t n = 10; n <= d.size(); n += 10) {
    const divbound::DiagonalScales scales(std::vector<double>(d.begin(), d.begin() + n));
    const sn::StudentNormalProblem p(nu, scales);
    if (n < sn::compute_n0(nu, scales.d_minus())) {
      std::printf("%6zu %12s %12s  below n0\n", n, "-", "-");
      continue;
    }
    const auto b = sn::tv_bounds_student_normal(p);
    const bool flip = !last.empty() && last != b.regime;
    std::printf("%6zu %12.6g %12.6g  %s%s\n", n, b.lower, b.upper, b.regime.c_str(), flip ? "  <- changes" : "");
    last = b.regime;
  }
}
