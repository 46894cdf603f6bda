#include <doctest.h>

#include <cmath>
#include <map>

#include "check_util.hpp"
#include "qent/cae.hpp"
#include "qent/states.hpp"

using namespace qent;
using namespace qent::testing;

namespace {

// Counted from the layer list: conv weights and biases plus two per batchnorm channel.
std::size_t count_by_hand(const ArchitectureSpec& spec) {
  std::size_t total = 0;
  for (const auto& l : spec.all_layers()) {
    if (l.kind == LayerKind::Conv2D || l.kind == LayerKind::ConvTranspose2D)
      total += l.in_channels * l.out_channels * l.kernel * l.kernel + l.out_channels;
    else if (l.kind == LayerKind::BatchNorm2D)
      total += 2 * l.out_channels;
  }
  return total;
}

std::vector<LayerKind> kinds(const std::vector<LayerConfig>& layers) {
  std::vector<LayerKind> out;
  for (const auto& l : layers) out.push_back(l.kind);
  return out;
}

}  // namespace

TEST_CASE("builtin architectures resolve to the input side") {
  const std::map<std::size_t, std::vector<std::size_t>> decoder_sides{
      {2, {1, 2, 4}},        {3, {2, 3, 5, 9}},     {4, {2, 4, 8, 16}},
      {5, {4, 7, 13, 25}},   {6, {11, 12, 35, 36}}, {7, {4, 7, 31, 49}}};
  for (const auto& [d, sides] : decoder_sides) {
    CAPTURE(d);
    auto spec = builtin_spec(d);
    const auto t = trace_shapes(spec);
    CHECK(t.decoder_sides == sides);
    CHECK(t.encoder_sides.front() == d * d);
    CHECK(t.decoder_sides.back() == d * d);
    CHECK_FALSE(spec.final_crop);
    for (std::size_t op : t.output_paddings) CHECK(op == 0);
    CHECK_NOTHROW(check_channel_chain(spec));
  }
  CHECK_THROWS_AS(builtin_spec(1), Error);
  CHECK_THROWS_AS(builtin_spec(8), Error);
}

TEST_CASE("parameter counts") {
  const std::map<std::size_t, std::size_t> expected{{2, 217867}, {3, 412277},  {4, 866132},
                                                    {5, 1352132}, {6, 1268052}, {7, 1528497}};
  for (const auto& [d, n] : expected) {
    CAPTURE(d);
    const auto spec = builtin_spec(d);
    CHECK(count_by_hand(spec) == n);
    CHECK(CaeModel<float>(spec).parameter_count() == n);
  }
}

TEST_CASE("layer ordering of the d = 3 model") {
  const auto spec = builtin_spec(3);
  using K = LayerKind;
  const std::vector<K> enc{K::Conv2D, K::BatchNorm2D, K::LeakyReLU, K::Dropout2D, K::Conv2D, K::BatchNorm2D,
                           K::GELU,   K::Dropout2D,   K::Conv2D,    K::BatchNorm2D, K::LeakyReLU, K::Dropout2D};
  const std::vector<K> dec{K::ConvTranspose2D, K::BatchNorm2D, K::GELU,     K::Dropout2D,
                           K::ConvTranspose2D, K::BatchNorm2D, K::LeakyReLU, K::Dropout2D, K::ConvTranspose2D};
  CHECK(kinds(spec.encoder_layers) == enc);
  CHECK(kinds(spec.decoder_layers) == dec);
  CHECK(spec.latent_batchnorm.kind == K::BatchNorm2D);
  CHECK(spec.latent_batchnorm.in_channels == 75);
  CHECK(spec.encoder_layers[3].dropout_rate == 0.2);
  CHECK(spec.decoder_layers.back().out_channels == 2);
}

TEST_CASE("channel chain validation") {
  auto spec = builtin_spec(2);
  spec.decoder_layers.back().out_channels = 3;
  CHECK_THROWS_AS(check_channel_chain(spec), Error);
  CHECK_THROWS_AS(CaeModel<double>{spec}, Error);
}

TEST_CASE("layer kind names round-trip") {
  for (auto k : {LayerKind::Conv2D, LayerKind::ConvTranspose2D, LayerKind::BatchNorm2D, LayerKind::Dropout2D,
                 LayerKind::LeakyReLU, LayerKind::GELU, LayerKind::Linear, LayerKind::Softmax})
    CHECK(parse_layer_kind(layer_kind_name(k)) == k);
  CHECK_FALSE(parse_layer_kind("Pool").has_value());
}

TEST_CASE("initialization") {
  CaeModel<double> a(builtin_spec(3)), b(builtin_spec(3)), c(builtin_spec(3));
  a.init(5);
  b.init(5);
  c.init(6);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(std::equal(pa[i].values().begin(), pa[i].values().end(), pb[i].values().begin()));
    differs |= !std::equal(pa[i].values().begin(), pa[i].values().end(), pc[i].values().begin());
  }
  CHECK(differs);

  const auto flat = a.spec().all_layers();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const auto& l = flat[i];
    const auto& p = a.layers()[i];
    if (l.kind == LayerKind::Conv2D || l.kind == LayerKind::ConvTranspose2D) {
      const double bound = std::sqrt(6.0 / double(l.in_channels * l.kernel * l.kernel));
      double max_abs = 0.0, sum2 = 0.0;
      for (double w : p.weight.values()) max_abs = std::max(max_abs, std::abs(w)), sum2 += w * w;
      CHECK(max_abs <= bound);
      // Uniform on [-b, b] has variance b^2 / 3.
      CHECK(sum2 / double(p.weight.numel()) == doctest::Approx(bound * bound / 3.0).epsilon(0.1));
      for (double v : p.bias.values()) CHECK(v == 0.0);
    } else if (l.kind == LayerKind::BatchNorm2D) {
      for (double g : p.weight.values()) CHECK(g == 1.0);
      CHECK(p.bn.running_var == std::vector<double>(l.out_channels, 1.0));
    }
  }
}

TEST_CASE("forward shapes for every builtin dimension") {
  for (std::size_t d = 2; d <= 7; ++d) {
    CAPTURE(d);
    CaeModel<float> m(builtin_spec(d));
    m.init(1);
    Rng rng(d);
    const auto rho = hs_random_state(d, d, rng);
    nn::NoGradGuard guard;
    const auto y = m.forward(encode_state<float>(rho), false);
    CHECK(y.shape() == nn::Shape{1, 2, d * d, d * d});
  }
}

TEST_CASE("forward preconditions") {
  CaeModel<double> m(builtin_spec(2));
  const auto x = encode_state<double>(maximally_mixed(2));
  CHECK_THROWS_AS(m.forward(x, false), Error);
  m.init(1);
  CHECK_THROWS_AS(m.forward(encode_state<double>(maximally_mixed(3)), false), Error);
  const auto mm = maximally_mixed(2);
  const auto pair = encode_batch<double>({&mm.mat(), &mm.mat()});
  CHECK_THROWS_AS(m.forward(pair, true), Error);
  CHECK_THROWS_AS(reconstruction_error(m, maximally_mixed(3).mat()), Error);
}

TEST_CASE("end-to-end gradient of the d = 2 model") {
  CaeModel<double> m(builtin_spec(2));
  m.init(11);
  Rng rng(12);
  std::vector<DensityMatrix> states;
  for (int i = 0; i < 4; ++i) states.push_back(hs_random_state(2, 2, rng));
  std::vector<const ComplexMatrix*> ptrs;
  for (const auto& s : states) ptrs.push_back(&s.mat());
  auto x = encode_batch<double>(ptrs);
  const auto target = x.detach();
  auto leaves = m.parameters();
  leaves.push_back(x);
  const auto r = grad_check(
      [&] {
        Rng mask(3);
        return nn::l1_loss(m.forward(x, true, &mask), target);
      },
      leaves, 300, rng);
  CHECK(r.coordinates == 300);
  CHECK(r.max_rel_error < kFdRelTol);
}

TEST_CASE("encoding round-trip and reconstruction error") {
  Rng rng(13);
  const auto rho = hs_random_state(3, 3, rng);
  const auto t = encode_state<double>(rho);
  CHECK(t.shape() == nn::Shape{1, 2, 9, 9});
  CHECK(t.values()[9 * 2 + 5] == rho.mat()(2, 5).real());
  CHECK(t.values()[81 + 9 * 2 + 5] == rho.mat()(2, 5).imag());
  CHECK(max_abs_diff(decode_output(t), rho.mat()) == 0.0);

  CaeModel<double> m(builtin_spec(3));
  m.init(2);
  nn::NoGradGuard guard;
  const auto out = m.forward(t, false);
  CHECK(reconstruction_error(m, rho.mat()) == elementwise_l1(decode_output(out), rho.mat()));
}

TEST_CASE("eval-mode output does not depend on the batch") {
  CaeModel<double> m(builtin_spec(3));
  m.init(3);
  Rng rng(14);
  std::vector<DensityMatrix> states;
  for (int i = 0; i < 3; ++i) states.push_back(hs_random_state(3, 3, rng));
  nn::NoGradGuard guard;
  const auto batch = m.forward(encode_batch<double>({&states[0].mat(), &states[1].mat(), &states[2].mat()}), false);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto single = m.forward(encode_state<double>(states[i]), false);
    CHECK(max_abs_diff(decode_output(batch, i), decode_output(single)) < 1e-12);
  }
}

TEST_CASE("precision casts preserve the model") {
  CaeModel<double> m(builtin_spec(3));
  m.init(4);
  const auto f = m.cast<float>();
  const auto back = f.cast<double>();
  const auto pm = m.parameters(), pb = back.parameters();
  for (std::size_t i = 0; i < pm.size(); ++i)
    for (std::size_t k = 0; k < pm[i].numel(); ++k)
      CHECK(pb[i].values()[k] == double(float(pm[i].values()[k])));
  CHECK(back.initialized());
}

TEST_CASE("named tensors") {
  CaeModel<float> m(builtin_spec(3));
  const auto named = m.named_tensors();
  CHECK(named.front().name == "encoder.0.weight");
  bool latent = false, running = false;
  for (const auto& t : named) {
    latent |= t.name == "latent.weight";
    running |= t.name == "decoder.1.running_var";
  }
  CHECK(latent);
  CHECK(running);
  CHECK(m.conv_weights().size() == 6);
}
