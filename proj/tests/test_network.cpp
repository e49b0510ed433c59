#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "scbnet/arch.hpp"
#include "scbnet/network.hpp"
#include "scbnet/rng.hpp"
#include "test_util.hpp"

using namespace scbnet;

namespace {

std::map<std::string, std::vector<float>> snapshot(const NetworkParams& p) {
  std::map<std::string, std::vector<float>> s;
  for_each_array(p, [&s](const ParamArrayInfo& i, const std::vector<float>& v) {
    s[i.name] = v;
  });
  return s;
}

Tensor4 uniform_batch(int n, int r, uint64_t seed) {
  Rng rng(seed);
  Tensor4 x(n, 1, r, r);
  for (auto& v : x.data) v = static_cast<float>(rng.uniform());
  return x;
}

}  // namespace

TEST_CASE("init is deterministic in the seed and distinct across seeds") {
  const NetworkSpec spec = build_architecture("arch-7", 16);
  const auto a = snapshot(init_params<float>(spec, 7));
  const auto b = snapshot(init_params<float>(spec, 7));
  const auto c = snapshot(init_params<float>(spec, 8));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("init follows the He-normal convention") {
  const NetworkSpec spec = build_architecture("arch-1", 32);
  const NetworkParams p = init_params<float>(spec, 11);
  for_each_array(p, [](const ParamArrayInfo& i, const std::vector<float>& v) {
    if (i.name.ends_with(".bias") || i.name.ends_with(".beta") ||
        i.name.ends_with(".running_mean")) {
      for (const float x : v) CHECK(x == 0.0f);
    } else if (i.name.ends_with(".gamma") || i.name.ends_with(".running_var")) {
      for (const float x : v) CHECK(x == 1.0f);
    } else {
      // weight array: mean near 0, sample std near sqrt(2 / fan_in)
      size_t fan_in = 1;
      for (size_t d = 1; d < i.dims.size(); ++d) fan_in *= i.dims[d];
      const double expect = std::sqrt(2.0 / static_cast<double>(fan_in));
      double sum = 0.0, sumsq = 0.0;
      for (const float x : v) {
        sum += x;
        sumsq += static_cast<double>(x) * x;
      }
      const double mean = sum / static_cast<double>(v.size());
      const double sd = std::sqrt(sumsq / static_cast<double>(v.size()) -
                                  mean * mean);
      INFO(i.name, " std ", sd, " expected ", expect);
      CHECK(std::abs(mean) < 0.35 * expect);
      CHECK(sd > 0.5 * expect);
      CHECK(sd < 1.5 * expect);
    }
  });
}

TEST_CASE("trainable array sizes add up to the reported parameter count") {
  for (const auto& id : registry_ids()) {
    const NetworkSpec spec = build_architecture(id, 64);
    const NetworkParams p = alloc_params<float>(spec);
    long long total = 0;
    for_each_array(p, [&](const ParamArrayInfo& i, const std::vector<float>& v) {
      if (i.trainable) total += static_cast<long long>(v.size());
      // declared dims always describe the storage
      uint64_t dim_prod = 1;
      for (const uint32_t d : i.dims) dim_prod *= d;
      CHECK(dim_prod == v.size());
    });
    INFO(id);
    CHECK(total == count_params(spec).total);
  }
}

TEST_CASE("forward shapes and input validation") {
  const NetworkSpec spec = build_architecture("arch-1", 64);
  NetworkParams p = init_params<float>(spec, 3);
  const Tensor4 x = uniform_batch(2, 64, 5);
  GradientTape tape;
  const Tensor4 logits = network_train_forward(spec, p, x, tape);
  CHECK(logits.n == 2);
  CHECK(logits.c == 1);
  CHECK(logits.h == 1);
  CHECK(logits.w == 1);
  CHECK_THROWS_AS(network_infer(spec, p, uniform_batch(1, 32, 5)), ShapeError);
  CHECK_THROWS_AS(
      network_infer(spec, p, Tensor4(1, 3, 64, 64)), ShapeError);
}

TEST_CASE("inference is repeatable and ignores batch composition") {
  const NetworkSpec spec = build_architecture("arch-6", 16);
  const NetworkParams p = init_params<float>(spec, 17);
  const Tensor4 x = uniform_batch(3, 16, 23);
  const Tensor4 a = network_infer(spec, p, x);
  const Tensor4 b = network_infer(spec, p, x);
  CHECK(a.data == b.data);
  // single-sample slice gives the same logit as the batched run
  Tensor4 first(1, 1, 16, 16);
  std::copy(x.data.begin(), x.data.begin() + 16 * 16, first.data.begin());
  const Tensor4 solo = network_infer(spec, p, first);
  CHECK(solo.data[0] == a.data[0]);
}

TEST_CASE("train forward moves the running statistics, infer does not") {
  const NetworkSpec spec = build_architecture("arch-1", 16);
  NetworkParams p = init_params<float>(spec, 29);
  const auto before = snapshot(p);
  network_infer(spec, p, uniform_batch(2, 16, 31));
  CHECK(snapshot(p) == before);
  GradientTape tape;
  network_train_forward(spec, p, uniform_batch(2, 16, 31), tape);
  const auto after = snapshot(p);
  CHECK(after.at("block1.bn.running_mean") !=
        before.at("block1.bn.running_mean"));
  // trainable arrays are untouched by the forward pass
  CHECK(after.at("block1.conv.weight") == before.at("block1.conv.weight"));
}

TEST_CASE("zero parameters give the zero logit") {
  const NetworkSpec spec = build_architecture("arch-1", 16);
  const NetworkParams p = alloc_params<float>(spec);
  const Tensor4 logits = network_infer(spec, p, uniform_batch(2, 16, 37));
  CHECK(logits.data[0] == 0.0f);
  CHECK(logits.data[1] == 0.0f);
}

TEST_CASE("backward returns gradients shaped like the parameters") {
  const NetworkSpec spec = build_architecture("arch-7", 16);
  NetworkParams p = init_params<float>(spec, 41);
  const Tensor4 x = uniform_batch(2, 16, 43);
  GradientTape tape;
  const Tensor4 logits = network_train_forward(spec, p, x, tape);
  Tensor4 dlogits(logits.n, 1, 1, 1);
  for (auto& v : dlogits.data) v = 0.5f;
  const auto back = network_backward(spec, p, tape, dlogits);
  CHECK(back.input_grad.same_shape(x));
  check_params_match(spec, back.grads);  // throws on any mismatch
  // at least one gradient per trainable array family is non-zero
  double conv_mag = 0.0, fc_mag = 0.0;
  for_each_array(back.grads,
                 [&](const ParamArrayInfo& i, const std::vector<float>& v) {
                   for (const float g : v) {
                     if (i.name.find(".conv.") != std::string::npos) {
                       conv_mag += std::abs(g);
                     }
                     if (i.name.find("fc") == 0 || i.name.find("out") == 0) {
                       fc_mag += std::abs(g);
                     }
                   }
                 });
  CHECK(conv_mag > 0.0);
  CHECK(fc_mag > 0.0);
}

TEST_CASE("check_params_match names the offending layer") {
  const NetworkSpec one = build_architecture("arch-1", 16);
  const NetworkSpec other = build_architecture("arch-2", 16);
  const NetworkParams p = alloc_params<float>(one);
  try {
    check_params_match(other, p);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("block1.conv.weight") !=
          std::string::npos);
  }
}

TEST_CASE("array walk covers every layer in declaration order") {
  const NetworkSpec spec = build_architecture("arch-7", 16);
  std::vector<std::string> names;
  for_each_array(alloc_params<float>(spec),
                 [&names](const ParamArrayInfo& i, const std::vector<float>&) {
                   names.push_back(i.name);
                 });
  const std::vector<std::string> expected = {
      "block1.conv.weight",   "block1.conv.bias",
      "block1.bn.gamma",      "block1.bn.beta",
      "block1.bn.running_mean", "block1.bn.running_var",
      "block2.conv.weight",   "block2.conv.bias",
      "block2.bn.gamma",      "block2.bn.beta",
      "block2.bn.running_mean", "block2.bn.running_var",
      "scb.direct1.conv.weight", "scb.direct1.conv.bias",
      "scb.direct1.bn.gamma", "scb.direct1.bn.beta",
      "scb.direct1.bn.running_mean", "scb.direct1.bn.running_var",
      "scb.direct2.conv.weight", "scb.direct2.conv.bias",
      "scb.direct2.bn.gamma", "scb.direct2.bn.beta",
      "scb.direct2.bn.running_mean", "scb.direct2.bn.running_var",
      "scb.skip.conv.weight", "scb.skip.conv.bias",
      "scb.skip.bn.gamma",    "scb.skip.bn.beta",
      "scb.skip.bn.running_mean", "scb.skip.bn.running_var",
      "fc1.weight",           "fc1.bias",
      "fc2.weight",           "fc2.bias",
      "out.weight",           "out.bias",
  };
  CHECK(names == expected);
}
