#include <doctest.h>

#include <cmath>
#include <complex>
#include <numeric>

#include "mmhar/core/errors.hpp"
#include "mmhar/synth/synth.hpp"

using namespace mmhar;
using namespace mmhar::synth;

namespace {

double mean_radius(ActionClass c, int seeds) {
  double s = 0;
  for (int i = 0; i < seeds; ++i) {
    Rng rng(static_cast<std::uint64_t>(i));
    s += make_contact_profile(c, 2.0, rng).radius_cm;
  }
  return s / seeds;
}

// Dominant frequency (Hz) of a real series by brute-force DFT, DC removed.
double spectral_peak(const std::vector<double>& x, double rate) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const std::size_t n = x.size();
  double best = 0, best_f = 0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    std::complex<double> acc = 0;
    for (std::size_t i = 0; i < n; ++i)
      acc += (x[i] - mean) * std::polar(1.0, -2.0 * M_PI * static_cast<double>(k * i) / static_cast<double>(n));
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      best_f = static_cast<double>(k) * rate / static_cast<double>(n);
    }
  }
  return best_f;
}

std::vector<double> gyro_series(const ImuProfile& p, int module, int axis) {
  std::vector<double> v;
  for (const auto& s : p.samples) v.push_back(s[static_cast<std::size_t>(module)][static_cast<std::size_t>(3 + axis)]);
  return v;
}

double energy(const TactileFrame& a, const TactileFrame& b) {
  double e = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = double(a.pixels[i]) - double(b.pixels[i]);
    e += d * d;
  }
  return e;
}

long total(const TactileFrame& f) { return std::accumulate(f.pixels.begin(), f.pixels.end(), 0L); }

}  // namespace

TEST_CASE("attribute mapping is monotone over seeds") {
  CHECK(mean_radius(ActionClass::Pinching, 100) < mean_radius(ActionClass::Tapping, 100));
  CHECK(mean_radius(ActionClass::Tapping, 100) < mean_radius(ActionClass::Patting, 100));
  for (int i = 0; i < 100; ++i) {
    Rng a(static_cast<std::uint64_t>(i)), b(static_cast<std::uint64_t>(i));
    CHECK(make_contact_profile(ActionClass::Pinching, 1.0, a).radius_cm <
          make_contact_profile(ActionClass::Patting, 1.0, b).radius_cm);
  }
  // Pressure L < M < H: Scratching (SLM), Pinching (SHM) and the M level.
  double dl = 0, dm = 0, dh = 0;
  double fl = 0, fm = 0, fh = 0;
  for (int i = 0; i < 100; ++i) {
    Rng r(static_cast<std::uint64_t>(1000 + i));
    dl += make_contact_profile(ActionClass::Scratching, 1.0, r).depth;
    dm += make_contact_profile(ActionClass::Massaging, 1.0, r).depth;
    dh += make_contact_profile(ActionClass::Pinching, 1.0, r).depth;
    fl += make_contact_profile(ActionClass::Pulling, 1.0, r).frequency_hz;
    fm += make_contact_profile(ActionClass::Pinching, 1.0, r).frequency_hz;
    fh += make_contact_profile(ActionClass::Tapping, 1.0, r).frequency_hz;
  }
  CHECK(dl < dm);
  CHECK(dm < dh);
  CHECK(fl < fm);
  CHECK(fm < fh);
  CHECK(area_radius_cm(Level::Low) == 0.5);
  CHECK(pressure_depth(Level::High) == 0.9);
  CHECK(frequency_hz(Level::Medium) == 2.0);
}

TEST_CASE("profile semantics") {
  Rng rng(1);
  CHECK(make_contact_profile(ActionClass::Idle, 3.0, rng).empty());
  auto l = make_contact_profile(ActionClass::Lingering, 3.0, rng);
  REQUIRE(!l.empty());
  const auto& c0 = l.samples.front().front();
  for (const auto& s : l.samples) {
    CHECK(s.front().theta == c0.theta);
    CHECK(s.front().z_cm == c0.z_cm);
    CHECK(std::abs(s.front().depth - l.depth) <= 0.05 * l.depth + 1e-12);
  }
  CHECK(modulation_of(ActionClass::Tapping) == Modulation::Pulse);
  CHECK(modulation_of(ActionClass::Stroking) == Modulation::Slide);
  CHECK(modulation_of(ActionClass::Shaking) == Modulation::Tremor);
  CHECK(modulation_of(ActionClass::Squeezing) == Modulation::Static);
  CHECK_THROWS_AS(make_contact_profile(ActionClass::Tapping, 0.0, rng), ConfigError);
}

TEST_CASE("renderer") {
  const SensorGeometry g;
  const RenderOptions opt;
  auto idle = render_frames(ContactProfile{ActionClass::Idle, 1.0}, g, opt);
  REQUIRE(idle.top.size() == 30);
  for (const auto& f : idle.top) {
    CHECK(f.pixels == idle.top.front().pixels);
    CHECK(total(f) == total(idle.top.front()));
  }
  // Displacement of the marker nearest the contact grows with depth.
  Contact c{2.0 * M_PI * 4.5 / 16, 23.0 * 6.5 / 8, 1.5, 0.2, 0.0, 0.0};
  auto disp = [&](double depth) {
    Contact d = c;
    d.depth = depth;
    PixelPoint rest, moved;
    REQUIRE(marker_pixel(std::span<const Contact>(&d, 1), g, CameraId::Top, opt, 6, 4, rest, moved));
    return std::hypot(moved.x - rest.x, moved.y - rest.y);
  };
  CHECK(disp(0.9) > disp(0.5));
  CHECK(disp(0.5) > disp(0.2));
  CHECK(disp(0.0) == 0.0);
  PixelPoint r, m;
  CHECK_FALSE(marker_pixel(std::span<const Contact>(&c, 1), g, CameraId::Bottom, opt, 6, 4, r, m));

  // Contact near the top shows more energy in the top camera.
  const auto rest_top = idle.top.front(), rest_bot = idle.bottom.front();
  Contact hi{1.0, 20.0, 2.0, 0.9, 0, 0}, lo{1.0, 3.0, 2.0, 0.9, 0, 0};
  auto t_hi = render_frame(std::span<const Contact>(&hi, 1), g, CameraId::Top, opt, 0);
  auto b_hi = render_frame(std::span<const Contact>(&hi, 1), g, CameraId::Bottom, opt, 0);
  CHECK(energy(t_hi, rest_top) > energy(b_hi, rest_bot));
  auto t_lo = render_frame(std::span<const Contact>(&lo, 1), g, CameraId::Top, opt, 0);
  auto b_lo = render_frame(std::span<const Contact>(&lo, 1), g, CameraId::Bottom, opt, 0);
  CHECK(energy(b_lo, rest_bot) > energy(t_lo, rest_top));
}

TEST_CASE("imu templates") {
  Rng rng(5);
  auto idle = make_imu_profile(ActionClass::Idle, 3.0, rng);
  REQUIRE(idle.samples.size() == 120);
  for (const auto& s : idle.samples) {
    const auto& a = s[0];
    CHECK(std::abs(std::hypot(a[0], a[1], a[2]) - 1.0) < 0.06);
  }
  int wins = 0;
  for (int i = 0; i < 20; ++i) {
    Rng r(static_cast<std::uint64_t>(i));
    auto tap = make_imu_profile(ActionClass::Tapping, 6.0, r);
    auto pull = make_imu_profile(ActionClass::Pulling, 6.0, r);
    wins += spectral_peak(gyro_series(tap, 3, 1), 40.0) > spectral_peak(gyro_series(pull, 3, 1), 40.0);
  }
  CHECK(wins == 20);
  Rng a(9), b(9);
  auto p1 = make_imu_profile(ActionClass::Shaking, 2.0, a);
  auto p2 = make_imu_profile(ActionClass::Shaking, 2.0, b);
  CHECK(p1.samples == p2.samples);
}

TEST_CASE("scripts and recordings") {
  // 15 performed actions (the 14 non-idle classes plus a repeat) with pauses.
  std::vector<ActionClass> all(kAllActions.begin(), kAllActions.end() - 1);
  all.push_back(ActionClass::Tapping);
  auto s = make_script(all, 4.0, 2.0, 3);
  CHECK(s.total_seconds() == doctest::Approx(92.0));
  auto labels = script_labels(s);
  CHECK(labels.end() - labels.start() == 92'000'000);
  int idle_runs = 0;
  for (const auto& e : labels.entries()) idle_runs += e.label == ActionClass::Idle;
  CHECK(idle_runs == 16);
  CHECK(extract_events(labels).size() == 15);

  auto doc = s.to_document();
  auto back = SynthScript::parse(doc);
  CHECK(back.items.size() == s.items.size());
  CHECK(back.seed == s.seed);
  CHECK_THROWS_AS(SynthScript::parse(KvDocument::parse("wobble = 1\ntapping 1\n")), ConfigError);
  CHECK_THROWS_AS(SynthScript::parse(KvDocument::parse("seed = 1\ntapping -1\n")), ConfigError);
  CHECK_THROWS_AS(SynthScript::parse(KvDocument::parse("seed = 1\nwaving 1\n")), ConfigError);

  SynthScript small;
  small.items = {{ActionClass::Tapping, 1.0}, {ActionClass::Rubbing, 1.0}};
  small.gap_s = 0.5;
  RenderOptions opt;
  opt.width = 64;
  opt.height = 36;
  SensorGeometry g;
  g.outer_ring_center = {PixelPoint{32, 18}, PixelPoint{32, 18}};
  g.outer_ring_radius_px = 15;
  auto r1 = gen_recording(small, g, opt);
  auto r2 = gen_recording(small, g, opt);
  CHECK(r1 == r2);
  CHECK(r1.top.size() == 105);
  CHECK(r1.imu.size() == 140 * 8);
  std::vector<Micros> grid;
  for (int k = 0; k < 105; ++k) grid.push_back(1'000'000 + std::llround(k * 1e6 / 30));
  auto ras = r1.labels->rasterize(grid, r1.labels->end());
  CHECK(extract_events(ras) == extract_events(*r1.labels));
  small.seed = 2;
  auto r3 = gen_recording(small, g, opt);
  CHECK(r3.labels == r1.labels);
  CHECK(r3.imu != r1.imu);
}

TEST_CASE("nearest-centroid separability on hand-crafted features") {
  const SensorGeometry g;
  const RenderOptions opt;
  const auto rest_top = render_frame({}, g, CameraId::Top, opt, 0);
  const auto rest_bot = render_frame({}, g, CameraId::Bottom, opt, 0);
  constexpr int kFeatures = 6;
  auto features = [&](ActionClass c, std::uint64_t seed) {
    Rng rng(seed);
    const auto style = SubjectStyle::draw(rng, 1.0, Hand::Right);
    auto cp = make_contact_profile(c, 3.0, rng, style);
    auto ip = make_imu_profile(c, 3.0, rng, style);
    std::array<double, kFeatures> f{};
    int frames = 0;
    for (std::size_t k = 0; k < 90; k += 6) {
      const auto& cts = cp.at(static_cast<double>(k) / 30.0);
      auto t = render_frame(cts, g, CameraId::Top, opt, 0);
      auto b = render_frame(cts, g, CameraId::Bottom, opt, 0);
      f[0] += std::log1p(energy(t, rest_top));
      f[1] += std::log1p(energy(b, rest_bot));
      long changed = 0;
      for (std::size_t i = 0; i < t.pixels.size(); ++i) changed += std::abs(int(t.pixels[i]) - int(rest_top.pixels[i])) > 20;
      for (std::size_t i = 0; i < b.pixels.size(); ++i) changed += std::abs(int(b.pixels[i]) - int(rest_bot.pixels[i])) > 20;
      f[2] += std::log1p(static_cast<double>(changed));
      ++frames;
    }
    for (int i = 0; i < 3; ++i) f[static_cast<std::size_t>(i)] /= frames;
    f[3] = spectral_peak(gyro_series(ip, 3, 1), 40.0) + spectral_peak(gyro_series(ip, 3, 0), 40.0);
    double gx = 0, gz = 0;
    for (const auto& s : ip.samples) {
      gx += s[0][0];
      gz += s[0][2];
    }
    f[4] = gx / static_cast<double>(ip.samples.size());
    f[5] = gz / static_cast<double>(ip.samples.size());
    return f;
  };
  std::vector<std::array<double, kFeatures>> train[kNumClasses], test[kNumClasses];
  for (int c = 0; c < kNumClasses; ++c)
    for (std::uint64_t s = 0; s < 8; ++s)
      (s < 5 ? train : test)[c].push_back(features(class_from_index(c), 100 * static_cast<std::uint64_t>(c) + s));
  std::array<double, kFeatures> mu{}, sd{};
  int n = 0;
  for (const auto& v : train)
    for (const auto& f : v) {
      for (int i = 0; i < kFeatures; ++i) mu[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)];
      ++n;
    }
  for (auto& m : mu) m /= n;
  for (const auto& v : train)
    for (const auto& f : v)
      for (int i = 0; i < kFeatures; ++i) sd[static_cast<std::size_t>(i)] += std::pow(f[static_cast<std::size_t>(i)] - mu[static_cast<std::size_t>(i)], 2);
  for (auto& s : sd) s = std::sqrt(s / n) + 1e-9;
  std::array<std::array<double, kFeatures>, kNumClasses> centroid{};
  for (int c = 0; c < kNumClasses; ++c) {
    for (const auto& f : train[c])
      for (int i = 0; i < kFeatures; ++i)
        centroid[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] += (f[static_cast<std::size_t>(i)] - mu[static_cast<std::size_t>(i)]) / sd[static_cast<std::size_t>(i)] / static_cast<double>(train[c].size());
  }
  int correct = 0, total_n = 0;
  for (int c = 0; c < kNumClasses; ++c)
    for (const auto& f : test[c]) {
      int best = -1;
      double bd = 1e300;
      for (int k = 0; k < kNumClasses; ++k) {
        double d = 0;
        for (int i = 0; i < kFeatures; ++i)
          d += std::pow((f[static_cast<std::size_t>(i)] - mu[static_cast<std::size_t>(i)]) / sd[static_cast<std::size_t>(i)] - centroid[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)], 2);
        if (d < bd) {
          bd = d;
          best = k;
        }
      }
      correct += best == c;
      ++total_n;
    }
  const double acc = static_cast<double>(correct) / total_n;
  MESSAGE("nearest-centroid accuracy " << acc);
  CHECK(acc > 0.5);
}
