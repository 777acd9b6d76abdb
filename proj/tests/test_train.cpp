#include <doctest.h>

#include <cmath>

#include "rsrwkv/train.hpp"
#include "test_util.hpp"

using namespace rsrwkv;

TEST_CASE("toy dataset is deterministic and in range") {
  const auto a = train::make_toy_dataset<double>(5, 8, 32);
  const auto b = train::make_toy_dataset<double>(5, 8, 32);
  REQUIRE(a.images.size() == 8);
  CHECK(a.labels == std::vector<std::size_t>{0, 1, 0, 1, 0, 1, 0, 1});
  for (std::size_t n = 0; n < 8; ++n) CHECK(a.images[n].data == b.images[n].data);
  for (double v : a.images[0].data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  const auto c = train::make_toy_dataset<double>(6, 8, 32);
  CHECK(a.images[0].data != c.images[0].data);
}

TEST_CASE("same seed reproduces the loss curve bit-exactly") {
  const auto cfg = train::toy_config();
  const auto ds = train::make_toy_dataset<double>(3, 4, 32);

  auto w1 = init_backbone<double>(cfg, 17);
  const auto r1 = train::train_toy(w1, ds, 5, 0.2);
  auto w2 = init_backbone<double>(cfg, 17);
  const auto r2 = train::train_toy(w2, ds, 5, 0.2);
  CHECK(r1.losses == r2.losses);
  CHECK(r1.final_loss == r2.final_loss);
}

TEST_CASE("zero learning rate keeps the loss constant") {
  const auto cfg = train::toy_config();
  const auto ds = train::make_toy_dataset<double>(4, 4, 32);
  auto w = init_backbone<double>(cfg, 18);
  const auto r = train::train_toy(w, ds, 4, 0.0);
  for (double l : r.losses) CHECK(l == r.losses[0]);
  CHECK(r.final_loss == r.losses[0]);
}

TEST_CASE("training reduces the loss within a few steps") {
  const auto cfg = train::toy_config();
  const auto ds = train::make_toy_dataset<double>(2, 8, 32);
  auto w = init_backbone<double>(cfg, 19);
  const auto r = train::train_toy(w, ds, 40, 0.2);
  CHECK(r.final_loss < r.losses[0]);
}

TEST_CASE("toy bounds are enforced") {
  ModelConfig wide = train::toy_config();
  wide.embed_dim = 64;  // > 32 channel bound
  CHECK_THROWS_AS(train::check_toy_bounds(wide, 32), ConfigError);

  ModelConfig cfg = train::toy_config();
  // 136x136 at patch 8 gives a 17x17 = 289-token grid, over the 256 bound
  CHECK_THROWS_AS(train::check_toy_bounds(cfg, 136), ConfigError);
  CHECK_THROWS_AS(train::check_toy_bounds(cfg, 30), ConfigError);  // 30 % 8
  train::check_toy_bounds(cfg, 128);  // 16x16 tokens, exactly at the bound
}
