#include <doctest.h>

#include <atomic>
#include <cmath>

#include "fixtures.hpp"
#include "loclab/ensemble.hpp"

using namespace loclab;

namespace {

EnsembleSpec chain(int side, double width, int realizations) {
  EnsembleSpec s;
  s.space.kind = SpaceKind::Lattice;
  s.space.dim = 1;
  s.space.side = side;
  s.width = width;
  s.realizations = realizations;
  s.master_seed = 17;
  s.params = DecayParams{0.1, 1.0, 0.0};
  s.times = log_time_grid(0.1, 1000, 60);
  s.times.insert(s.times.begin(), 0.0);
  return s;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("one realization is the deterministic pipeline") {
  auto spec = chain(32, 4, 1);
  auto ens = ensemble_moments(spec, 16);
  auto space = fixtures::path(32);
  auto sd = diagonalize(build_anderson(space, 4, realization_seed(spec, 0)));
  auto w = full_window(sd, -2.0, 6.0);
  auto series = moment_series(sd, w, 16, spec.params, spec.times, false);
  for (std::size_t i = 0; i < spec.times.size(); ++i) CHECK(ens.mean[i] == series.values[i]);
  CHECK(ens.mean_of_sup == series.sup_over_grid);
  CHECK(ens.stddev[5] == 0.0);
}

TEST_CASE("zero disorder has zero variance") {
  auto ens = ensemble_moments(chain(24, 0, 4), 12);
  for (double s : ens.stddev) CHECK(s == 0.0);
}

TEST_CASE("mean of sup dominates sup of mean") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto spec = chain(40, 3, 6);
    spec.master_seed = seed;
    auto ens = ensemble_moments(spec, 20);
    CHECK(ens.mean_of_sup >= ens.sup_of_mean);
    CHECK(ens.ordering_holds);
  }
}

TEST_CASE("results do not depend on the thread count") {
  auto spec = chain(40, 4, 6);
  auto one = ensemble_moments(spec, 20);
  spec.threads = 4;
  auto four = ensemble_moments(spec, 20);
  CHECK(one.to_json().dump() == four.to_json().dump());
  CHECK(one.mean == four.mean);
  auto k1 = ensemble_kernel_decay(spec, {20, 30});
  spec.threads = 1;
  auto k4 = ensemble_kernel_decay(spec, {20, 30});
  CHECK(k1.to_json().dump() == k4.to_json().dump());
}

TEST_CASE("realization seeds") {
  auto spec = chain(10, 4, 3);
  CHECK(realization_seed(spec, 0) != realization_seed(spec, 1));
  CHECK(realization_seed(spec, 2) == derive_seed(17, 2));
}

TEST_CASE("parallel_for rethrows the lowest index") {
  std::atomic<int> calls{0};
  try {
    parallel_for(10, 3, [&](std::size_t i) {
      ++calls;
      if (i == 3 || i == 7) throw std::runtime_error("at " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "at 3");
  }
  CHECK(calls == 10);
}

TEST_CASE("digest is stable") {
  CHECK(digest(std::vector<double>{}) == "cbf29ce484222325");
  CHECK(digest(std::vector<double>{1.0, 2.0}) == digest(std::vector<double>{1.0, 2.0}));
  CHECK(digest(std::vector<double>{1.0, 2.0}) != digest(std::vector<double>{2.0, 1.0}));
}

TEST_CASE("sigma spread of the mean shrinks with R") {
  auto spec = chain(48, 4, 20);
  std::vector<double> se;
  for (int R : {5, 10, 20}) {
    spec.realizations = R;
    auto k = ensemble_kernel_decay(spec, {24});
    const auto& s = k.sites[0];
    se.push_back(s.realization_sigma_std / std::sqrt(double(R)));
  }
  CHECK(se[1] < se[0]);
  CHECK(se[2] < se[1]);
}

TEST_CASE("free chain fails the ensemble envelope") {
  auto spec = chain(64, 0, 2);
  spec.params.sigma = 0.2;
  auto k = ensemble_kernel_decay(spec, {32, 48});
  CHECK_FALSE(k.sites[0].kernel_fit.verdict);
  CHECK(k.sites[0].kernel_fit.sigma_at_required_zeta < 0.2);
  auto loc = chain(64, 4, 10);
  loc.params.sigma = 0.2;
  auto kl = ensemble_kernel_decay(loc, {32});
  CHECK(kl.sites[0].kernel_fit.sigma_at_required_zeta > k.sites[0].kernel_fit.sigma_at_required_zeta);
}

TEST_CASE("spec validation") {
  auto spec = chain(10, 4, 0);
  CHECK_THROWS_AS(spec.validate(), ParameterError);
  spec = chain(10, -1, 2);
  CHECK_THROWS_AS(spec.validate(), ParameterError);
  spec = chain(10, 1, 2);
  spec.times = {1.0, 2.0};
  CHECK_THROWS_AS(spec.validate(), ParameterError);
}

}
