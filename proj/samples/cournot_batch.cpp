// Runs both algorithms on a few seeded Cournot markets and prints a summary.
//
//   cournot_batch [N] [n_d] [n_c] [runs]

#include <cstdio>
#include <cstdlib>

#include <mineseek.hpp>

int main(int argc, char** argv) {
  using namespace mineseek;
  CournotParams prm;
  prm.N = argc > 1 ? std::atoi(argv[1]) : 4;
  prm.n_d = argc > 2 ? std::atoi(argv[2]) : 3;
  prm.n_c = argc > 3 ? std::atoi(argv[3]) : 3;
  const int runs = argc > 4 ? std::atoi(argv[4]) : 5;

  std::printf("%6s %4s %10s %6s %14s %12s\n", "seed", "alg", "status", "rounds", "potential", "violation");
  for (int s = 1; s <= runs; ++s) {
    const auto g = cournot_generate(prm, static_cast<std::uint64_t>(s));
    for (int alg : {1, 2}) {
      const SeekResult r = alg == 1 ? run_algorithm1(g) : run_algorithm2(g);
      std::printf("%6d %4d %10s %6zu %14.6g %12.3g\n", s, alg, stop_reason_name(r.reason), r.iterations,
                  r.trace.final_potential, r.verdict ? r.verdict->max_violation() : 0.0);
    }
  }
  return 0;
}
