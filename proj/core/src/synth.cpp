#include "toolmotion/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>

#include "toolmotion/error.hpp"
#include "toolmotion/features.hpp"
#include "toolmotion/parallel.hpp"
#include "toolmotion/strokes.hpp"

namespace toolmotion {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr Vec3 kU{1.0, 0.0, 0.0};
constexpr Vec3 kV{0.0, 1.0, 0.0};
constexpr Vec3 kN{0.0, 0.0, 1.0};
constexpr Vec2 kCoverageCenter{0.0, 20.0};

Vec3 anatomy_point(const Vec2& q, double h) { return kU * q.x + kV * q.y + kN * h; }

Vec2 rotate2(const Vec2& v, double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double head_angle(const HeadMotion& head, double start, double t) {
  if (head.amplitude_deg == 0.0 || t < start) return 0.0;
  return head.amplitude_deg * kDeg * std::sin(2.0 * kPi * head.frequency_hz * (t - start));
}

RigidTransform head_rotation(double theta) { return {UnitQuaternion::from_axis_angle(kU, theta), Vec3{}}; }

// Heights rise linearly from the plane; the first `rise` samples lift straight off
// the plane, then the tip glides to start + length * dir with a sideways bow.
struct StrokeDesign {
  Vec2 start;
  Vec2 dir{0.0, 1.0};
  double length = 0.0;
  double height = 0.0;
  int samples = 0;  // end index relative to the start
  double target = 1.0;
  double bow = 0.0;

  Vec2 end() const { return start + dir * length; }
  double h(int j) const { return height * j / samples; }

  Vec2 inplane(int j, int rise) const {
    if (j <= rise) return start;
    if (j >= samples) return end();
    const double s = smoothstep(static_cast<double>(j - rise) / (samples - rise));
    const Vec2 perp{-dir.y, dir.x};
    return start + dir * (length * s) + perp * (bow * std::sin(kPi * s));
  }
};

// Curvature of the smoothed stroke. Neighbouring samples mirror the heights about
// the stroke ends and hold the in-plane position, as the surrounding phases do.
double smoothed_curvature(const StrokeDesign& d, int half_window, int rise) {
  const int w = 2 * half_window + 1;
  std::vector<Vec3> raw;
  raw.reserve(static_cast<std::size_t>(d.samples + w));
  for (int j = -half_window; j <= d.samples + half_window; ++j) {
    if (j < 0) raw.push_back(anatomy_point(d.start, d.h(-j)));
    else if (j > d.samples) raw.push_back(anatomy_point(d.end(), d.h(2 * d.samples - j)));
    else raw.push_back(anatomy_point(d.inplane(j, rise), d.h(j)));
  }
  std::vector<Vec3> sm;
  for (int j = 0; j <= d.samples; ++j) {
    Vec3 acc;
    for (int k = 0; k < w; ++k) acc += raw[static_cast<std::size_t>(j + k)];
    sm.push_back(acc / w);
  }
  double len = 0.0;
  for (std::size_t i = 1; i < sm.size(); ++i) len += distance(sm[i], sm[i - 1]);
  return len / distance(sm.front(), sm.back());
}

void solve_bow(StrokeDesign& d, int half_window, int rise) {
  auto f = [&](double bow) {
    d.bow = bow;
    return smoothed_curvature(d, half_window, rise) - d.target;
  };
  if (f(0.0) >= 0.0) {
    d.bow = 0.0;
    return;
  }
  double lo = 0.0;
  double hi = d.length;
  while (f(hi) < 0.0) hi *= 2.0;
  for (int i = 0; i < 100 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  d.bow = 0.5 * (lo + hi);
}

double hull_area_with(std::vector<Vec2>& pts, const Vec2& p) {
  pts.push_back(p);
  const double a = convex_hull_area(pts);
  pts.pop_back();
  return a;
}

// Stroke starts on the plane. A fresh start sits outside one hull edge, placed so
// the hull grows by exactly the drawn step; a revisit lands strictly inside.
std::vector<Vec2> coverage_starts(const SkillProfile& p, int n, std::mt19937_64& rng, std::vector<bool>& revisit) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec2> starts;
  revisit.assign(static_cast<std::size_t>(n), false);

  const double a0 = 2.0 * kPi * unit(rng);
  const double seed_area = 2.0 * std::max(p.coverage_step, 0.5);
  const double r = std::sqrt(4.0 * seed_area / (3.0 * std::sqrt(3.0)));
  for (int k = 0; k < 3 && k < n; ++k) {
    const double a = a0 + 2.0 * kPi * k / 3.0;
    starts.push_back(kCoverageCenter + Vec2{r * std::cos(a), r * std::sin(a)});
  }

  for (int i = 3; i < n; ++i) {
    const std::vector<Vec2> hull = convex_hull(starts);
    const std::size_t m = hull.size();
    const bool inside = unit(rng) < p.revisit_prob;
    const double factor = std::max(0.2, 1.0 + p.coverage_jitter * normal(rng));
    const double step = p.coverage_step * factor;
    const std::size_t edge_draw = static_cast<std::size_t>(unit(rng) * 1e9);
    double l1 = unit(rng);
    double l2 = unit(rng);

    if (inside || !(step > 0.0)) {
      Vec2 c;
      for (const Vec2& q : hull) c = c + q;
      c = c * (1.0 / static_cast<double>(m));
      if (l1 + l2 > 1.0) {
        l1 = 1.0 - l1;
        l2 = 1.0 - l2;
      }
      const Vec2& a = hull[edge_draw % m];
      const Vec2& b = hull[(edge_draw + 1) % m];
      starts.push_back(c + (a - c) * (0.9 * l1) + (b - c) * (0.9 * l2));
      revisit[static_cast<std::size_t>(i)] = true;
      continue;
    }

    double longest = 0.0;
    for (std::size_t k = 0; k < m; ++k) longest = std::max(longest, (hull[(k + 1) % m] - hull[k]).norm());
    std::vector<std::size_t> candidates;
    for (std::size_t k = 0; k < m; ++k) {
      if ((hull[(k + 1) % m] - hull[k]).norm() >= 0.5 * longest) candidates.push_back(k);
    }
    const std::size_t k = candidates[edge_draw % candidates.size()];
    const Vec2 a = hull[k];
    const Vec2 e = hull[(k + 1) % m] - a;
    const double len = e.norm();
    const Vec2 mid = a + e * 0.5;
    const Vec2 out{e.y / len, -e.x / len};

    const double base = convex_hull_area(starts);
    auto grow = [&](double t) { return hull_area_with(starts, mid + out * t) - base - step; };
    double lo = 0.0;
    double hi = 2.0 * step / len;
    while (grow(hi) < 0.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double t = 0.5 * (lo + hi);
      (grow(t) < 0.0 ? lo : hi) = t;
    }
    starts.push_back(mid + out * (0.5 * (lo + hi)));
  }
  return starts;
}

struct SubtrialBuild {
  std::vector<Vec3> points;  // anatomy frame
  std::vector<StrokeTruth> strokes;
};

SubtrialBuild build_subtrial(const SkillProfile& p, int n_strokes, int half_window, double rate,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int rise = half_window + 1;
  const int min_samples = 2 * rise + 2;
  const int max_samples = std::max(min_samples, static_cast<int>(std::floor(2.9 * rate)));

  std::vector<bool> revisit;
  const std::vector<Vec2> starts = coverage_starts(p, n_strokes, rng, revisit);

  std::vector<StrokeDesign> designs(static_cast<std::size_t>(n_strokes));
  for (int k = 0; k < n_strokes; ++k) {
    StrokeDesign& d = designs[static_cast<std::size_t>(k)];
    d.start = starts[static_cast<std::size_t>(k)];
    const double dur = p.duration_mean + p.duration_local_jitter * normal(rng);
    d.samples = std::clamp(static_cast<int>(std::lround(dur * rate)), min_samples, max_samples);
    d.height = p.stroke_amplitude * std::clamp(1.0 + 0.02 * normal(rng), 0.95, 1.05);
    d.length = p.stroke_length * std::clamp(1.0 + 0.05 * normal(rng), 0.85, 1.15);
    d.dir = rotate2(Vec2{0.0, 1.0}, (unit(rng) - 0.5) * 30.0 * kDeg);
    d.target = std::max(1.0, p.curvature_mean + p.curvature_local_jitter * normal(rng));
    solve_bow(d, half_window, rise);
  }

  SubtrialBuild out;
  auto push = [&](const Vec2& q, double h) { out.points.push_back(anatomy_point(q, h)); };

  const StrokeDesign& first = designs.front();
  const double top = 0.9 * first.height;
  const double bottom = first.h(rise);
  for (int m = 0; m < 6; ++m) push(first.start, top + (bottom - top) * m / 6.0);
  for (int j = rise; j >= 1; --j) push(first.start, first.h(j));

  for (int k = 0; k < n_strokes; ++k) {
    const StrokeDesign& d = designs[static_cast<std::size_t>(k)];
    StrokeTruth st;
    st.start_idx = out.points.size();
    for (int j = 0; j <= d.samples; ++j) push(d.inplane(j, rise), d.h(j));
    st.end_idx = out.points.size() - 1;
    st.duration = d.samples / rate;
    st.target_curvature = d.target;
    st.curvature = smoothed_curvature(d, half_window, rise);
    st.start = d.start;
    st.revisit = revisit[static_cast<std::size_t>(k)];
    out.strokes.push_back(st);

    for (int j = 1; j <= rise; ++j) push(d.end(), d.h(d.samples - j));
    const double from = d.h(d.samples - rise);
    if (k + 1 < n_strokes) {
      const StrokeDesign& next = designs[static_cast<std::size_t>(k + 1)];
      const double to = next.h(rise);
      if (!(from > to)) throw Error(ErrorKind::NumericFailure, "stroke return phase is not descending");
      const int middle = 3 + static_cast<int>(unit(rng) * 6.0);
      for (int m = 1; m <= middle; ++m) {
        const double s = static_cast<double>(m) / (middle + 1);
        const Vec2 q = d.end() + (next.start - d.end()) * smoothstep(s);
        push(q, from + (to - from) * s);
      }
      for (int j = rise; j >= 1; --j) push(next.start, next.h(j));
    } else {
      for (int m = 1; m <= 6; ++m) push(d.end(), from - 0.7 * from * m / 6.0);
    }
  }
  return out;
}

enum class SampleKind { Fixed, Anatomy, Gap };

struct RawSample {
  SampleKind kind = SampleKind::Gap;
  Vec3 point;  // tracker frame (Fixed) or anatomy frame (Anatomy)
  Tip tip = Tip::A;
  bool pivoting = false;
};

Vec3 random_offset(std::mt19937_64& rng, double sign) {
  std::uniform_real_distribution<double> small(-1.5, 1.5);
  std::uniform_real_distribution<double> reach(-3.0, 3.0);
  const double x = small(rng);
  const double y = small(rng);
  return {x, y, sign * (95.0 + reach(rng))};
}

void validate_spec(const TrialSpec& spec) {
  if (spec.operators.empty()) throw Error(ErrorKind::BadProfile, "trial needs at least one operator");
  for (const SynthOperator& op : spec.operators) op.profile.validate();
  if (!(spec.rate > 0.0)) throw Error(ErrorKind::BadProfile, "rate must be > 0");
  if (spec.strokes_min < 3 || spec.strokes_max < spec.strokes_min) {
    throw Error(ErrorKind::BadProfile, "stroke count range must satisfy 3 <= min <= max");
  }
  if (spec.subtrials_per_operator < 1) throw Error(ErrorKind::BadProfile, "subtrials_per_operator must be >= 1");
  if (!(spec.head.amplitude_deg >= 0.0 && spec.head.frequency_hz >= 0.0)) {
    throw Error(ErrorKind::BadProfile, "head motion amplitude and frequency must be >= 0");
  }
}

nlohmann::ordered_json vec_json(const Vec3& v) { return {v.x, v.y, v.z}; }

nlohmann::ordered_json pose_json(const RigidTransform& t) {
  const auto& q = t.rotation;
  return {{"rotation", {q.w(), q.x(), q.y(), q.z()}}, {"translation", vec_json(t.translation)}};
}

}  // namespace

void SkillProfile::validate() const {
  const double values[] = {curvature_mean, curvature_local_jitter, duration_mean, duration_local_jitter,
                           coverage_step,  coverage_jitter,        revisit_prob,  stroke_amplitude,
                           stroke_length,  noise_sigma};
  for (double v : values) {
    if (!(std::isfinite(v) && v >= 0.0)) throw Error(ErrorKind::BadProfile, "profile values must be finite and >= 0");
  }
  if (revisit_prob > 1.0) throw Error(ErrorKind::BadProfile, "revisit_prob must be <= 1");
  if (curvature_mean < 1.0) throw Error(ErrorKind::BadProfile, "curvature_mean must be >= 1");
  if (!(duration_mean > 0.0 && stroke_amplitude > 0.0 && stroke_length > 0.0)) {
    throw Error(ErrorKind::BadProfile, "duration_mean, stroke_amplitude and stroke_length must be > 0");
  }
}

SkillProfile default_expert_profile() {
  SkillProfile p;
  p.curvature_mean = 1.22;
  p.curvature_local_jitter = 0.02;
  p.duration_mean = 0.75;
  p.duration_local_jitter = 0.14;
  p.coverage_step = 6.0;
  p.coverage_jitter = 0.3;
  p.revisit_prob = 0.25;
  p.stroke_amplitude = 20.0;
  p.stroke_length = 8.0;
  p.noise_sigma = 0.3;
  return p;
}

SkillProfile default_novice_profile() {
  SkillProfile p;
  p.curvature_mean = 1.27;
  p.curvature_local_jitter = 0.045;
  p.duration_mean = 0.69;
  p.duration_local_jitter = 0.09;
  p.coverage_step = 4.8;
  p.coverage_jitter = 0.3;
  p.revisit_prob = 0.31;
  p.stroke_amplitude = 19.0;
  p.stroke_length = 7.4;
  p.noise_sigma = 0.3;
  return p;
}

double SynthTruth::theta_at(double t) const { return head_angle(head, head_motion_start, t); }

Plane SynthTruth::plane_at(double t) const {
  const Plane moved = rotate_plane(plane, head_axis.point, head_axis.direction, theta_at(t));
  return Plane(anatomy_to_tracker.apply(moved.point()), anatomy_to_tracker.rotation.rotate(moved.normal()));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

GeneratedTrial generate_trial(const TrialSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double rate = spec.rate;
  const int window = default_smooth_window(rate);
  const int half_window = window / 2;
  auto seconds = [&](double s) { return static_cast<std::size_t>(std::lround(s * rate)); };

  GeneratedTrial out;
  SynthTruth& truth = out.truth;
  truth.tip_a_offset = random_offset(rng, 1.0);
  truth.tip_b_offset = random_offset(rng, -1.0);
  truth.anatomy_to_tracker = {UnitQuaternion::from_axis_angle(Vec3{0.3, -0.5, 0.8}, 0.4 + 0.4 * unit(rng)),
                              Vec3{150.0, -40.0, 220.0}};
  truth.head_sensor_mount = {UnitQuaternion::from_axis_angle(Vec3{1.0, 0.2, 0.0}, 0.4), Vec3{0.0, 40.0, 60.0}};
  truth.plane = Plane(Vec3{}, kN);
  truth.basis = {kU, kV};
  truth.head_axis = {Vec3{}, kU};
  truth.head = spec.head;
  truth.smooth_window = window;

  double noise = 0.0;
  for (const SynthOperator& op : spec.operators) noise = std::max(noise, op.profile.noise_sigma);

  std::vector<RawSample> raw;
  auto gap = [&](double s) { raw.insert(raw.end(), seconds(s), RawSample{}); };
  auto interval_of = [&](std::size_t first, std::size_t end) {
    return Interval{static_cast<double>(first) / rate, static_cast<double>(end) / rate};
  };

  // pivot segments, tracker frame
  const Vec3 pivot_a{60.0, 180.0, 40.0};
  const Vec3 pivot_b{90.0, 180.0, 40.0};
  std::size_t begin = raw.size();
  raw.insert(raw.end(), seconds(5.0), RawSample{SampleKind::Fixed, pivot_a, Tip::A, true});
  out.trial.pivot_a = interval_of(begin, raw.size());
  gap(1.0);
  begin = raw.size();
  raw.insert(raw.end(), seconds(5.0), RawSample{SampleKind::Fixed, pivot_b, Tip::B, true});
  out.trial.pivot_b = interval_of(begin, raw.size());
  gap(1.0);

  // registration: two loops around the nostril rim
  begin = raw.size();
  const std::size_t loop = seconds(4.0);
  for (std::size_t i = 0; i < 2 * loop; ++i) {
    const double phi = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(loop);
    const Vec3 q = kU * (22.0 * std::cos(phi)) + kN * (14.0 * std::sin(phi)) + kV * (4.0 * std::cos(2.0 * phi));
    raw.push_back({SampleKind::Anatomy, q, Tip::A, false});
  }
  out.trial.registration_interval = interval_of(begin, raw.size());
  out.trial.registration_tip = Tip::A;
  truth.head_motion_start = static_cast<double>(raw.size()) / rate;
  gap(2.0);

  // sub-trials
  const std::size_t n_ops = spec.operators.size();
  const int n_sub = spec.subtrials_per_operator * static_cast<int>(n_ops);
  std::uniform_int_distribution<int> stroke_count(spec.strokes_min, spec.strokes_max);
  for (int s = 0; s < n_sub; ++s) {
    const SynthOperator& op = spec.operators[static_cast<std::size_t>(s) % n_ops];
    const Tip tip = s % 2 == 0 ? Tip::A : Tip::B;
    const SubtrialBuild b = build_subtrial(op.profile, stroke_count(rng), half_window, rate, rng);
    begin = raw.size();
    for (const Vec3& p : b.points) raw.push_back({SampleKind::Anatomy, p, tip, false});

    SubtrialTruth st;
    st.operator_id = op.id;
    st.skill = op.skill;
    st.tip = tip;
    st.interval = interval_of(begin, raw.size());
    st.strokes = b.strokes;
    std::vector<Vec2> starts;
    std::vector<double> curv, dur;
    for (StrokeTruth& k : st.strokes) {
      k.start_t = static_cast<double>(begin + k.start_idx) / rate;
      k.end_t = static_cast<double>(begin + k.end_idx) / rate;
      starts.push_back(k.start);
      curv.push_back(k.curvature);
      dur.push_back(k.duration);
    }
    const SearchGraph g = build_search_graph(starts, std::vector<double>(starts.size(), 0.0));
    st.hull_areas = g.hull_areas;
    if (starts.size() >= 4) {
      st.scc = scc(curv, 5);
      st.sdc = sdc(dur, 5);
      st.cr = coverage_rate(g);
    }
    out.trial.annotations.push_back({st.interval, op.id, op.skill, tip, true});
    truth.subtrials.push_back(std::move(st));
    gap(s + 1 < n_sub ? 2.0 + 2.0 * unit(rng) : 1.0);
  }

  // tracker-frame tip positions
  const std::size_t n = raw.size();
  std::vector<Vec3> x(n);
  std::vector<RigidTransform> head(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    head[i] = truth.anatomy_to_tracker * head_rotation(truth.theta_at(t));
    if (raw[i].kind == SampleKind::Fixed) x[i] = raw[i].point;
    if (raw[i].kind == SampleKind::Anatomy) x[i] = head[i].apply(raw[i].point);
  }
  for (std::size_t i = 0; i < n;) {
    if (raw[i].kind != SampleKind::Gap) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && raw[j].kind == SampleKind::Gap) ++j;
    const Vec3 from = i > 0 ? x[i - 1] : (j < n ? x[j] : Vec3{});
    const Vec3 to = j < n ? x[j] : from;
    const Tip tip = j < n ? raw[j].tip : raw[i - 1].tip;
    for (std::size_t k = i; k < j; ++k) {
      const double s = static_cast<double>(k - i + 1) / static_cast<double>(j - i + 1);
      x[k] = from + (to - from) * s;
      raw[k].tip = tip;
    }
    i = j;
  }

  // sensor poses
  const UnitQuaternion tool_base = UnitQuaternion::from_axis_angle(Vec3{1.0, 0.0, 0.0}, 2.3);
  const UnitQuaternion pivot_base = UnitQuaternion::from_axis_angle(Vec3{0.0, 1.0, 0.2}, 0.5);
  const double ph1 = 2.0 * kPi * unit(rng);
  const double ph2 = 2.0 * kPi * unit(rng);
  std::normal_distribution<double> jitter(0.0, 1.0);
  auto noisy = [&](const Vec3& p) {
    if (noise == 0.0) return p;
    const double a = jitter(rng);
    const double b = jitter(rng);
    const double c = jitter(rng);
    return p + Vec3{a, b, c} * noise;
  };

  PoseStream cottle{{}, rate};
  PoseStream head_stream{{}, rate};
  cottle.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    UnitQuaternion rot;
    if (raw[i].pivoting) {
      rot = pivot_base * UnitQuaternion::from_axis_angle(kU, 25.0 * kDeg * std::sin(2.0 * kPi * t / 2.5)) *
            UnitQuaternion::from_axis_angle(kV, 25.0 * kDeg * std::sin(2.0 * kPi * t / 1.7 + 0.3));
    } else {
      rot = head[i].rotation * tool_base *
            UnitQuaternion::from_axis_angle(kU, 10.0 * kDeg * std::sin(2.0 * kPi * 0.3 * t + ph1)) *
            UnitQuaternion::from_axis_angle(kV, 10.0 * kDeg * std::sin(2.0 * kPi * 0.23 * t + ph2));
    }
    const Vec3 offset = raw[i].tip == Tip::A ? truth.tip_a_offset : truth.tip_b_offset;
    cottle.samples.push_back({t, {rot, noisy(x[i] - rot.rotate(offset))}});
    if (spec.head_sensor) {
      const RigidTransform sensor = head[i] * truth.head_sensor_mount;
      head_stream.samples.push_back({t, {sensor.rotation, noisy(sensor.translation)}});
    }
  }

  out.trial.id = spec.id;
  out.trial.cottle_stream = std::move(cottle);
  if (spec.head_sensor) out.trial.head_stream = std::move(head_stream);
  validate_trial(out.trial);
  return out;
}

GeneratedTrial generate_trial(const SkillProfile& profile, const HeadMotion& head, std::uint64_t seed) {
  TrialSpec spec;
  spec.operators.push_back({"E1", SkillClass::Expert, profile});
  spec.head = head;
  return generate_trial(spec, seed);
}

Cohort generate_cohort(const CohortSpec& spec, std::uint64_t seed) {
  if (spec.n_experts < 1 || spec.n_novices < 1) throw Error(ErrorKind::BadProfile, "cohort needs both classes");
  if (spec.expert_trials < 0 || spec.novice_trials < 0 || spec.shared_trials < 0 ||
      spec.expert_trials + spec.novice_trials + spec.shared_trials < 1) {
    throw Error(ErrorKind::BadProfile, "cohort trial counts must be >= 0 with at least one trial");
  }
  spec.expert.validate();
  spec.novice.validate();

  Cohort cohort;
  auto perturb = [&](SkillProfile p, std::uint64_t stream) {
    std::mt19937_64 rng(derive_seed(seed, stream));
    std::uniform_real_distribution<double> f(1.0 - spec.operator_jitter, 1.0 + spec.operator_jitter);
    for (double* v : {&p.curvature_local_jitter, &p.duration_mean, &p.duration_local_jitter, &p.coverage_step,
                      &p.revisit_prob, &p.stroke_amplitude, &p.stroke_length}) {
      *v *= f(rng);
    }
    p.curvature_mean = 1.0 + (p.curvature_mean - 1.0) * f(rng);
    p.revisit_prob = std::min(p.revisit_prob, 1.0);
    return p;
  };
  for (int i = 0; i < spec.n_experts; ++i) {
    cohort.operators.push_back(
        {fmt::format("E{}", i + 1), SkillClass::Expert, perturb(spec.expert, 1000 + static_cast<std::uint64_t>(i))});
  }
  for (int i = 0; i < spec.n_novices; ++i) {
    cohort.operators.push_back(
        {fmt::format("N{}", i + 1), SkillClass::Novice, perturb(spec.novice, 2000 + static_cast<std::uint64_t>(i))});
  }
  const auto expert = [&](int i) { return cohort.operators[static_cast<std::size_t>(i % spec.n_experts)]; };
  const auto novice = [&](int i) {
    return cohort.operators[static_cast<std::size_t>(spec.n_experts + i % spec.n_novices)];
  };

  std::vector<TrialSpec> specs;
  const int total = spec.expert_trials + spec.novice_trials + spec.shared_trials;
  for (int i = 0; i < total; ++i) {
    TrialSpec t;
    t.id = fmt::format("T{:02d}", i + 1);
    t.head = spec.head;
    t.head_sensor = spec.head_sensor;
    t.rate = spec.rate;
    if (i < spec.expert_trials) {
      t.operators = {expert(i)};
    } else if (i < spec.expert_trials + spec.novice_trials) {
      t.operators = {novice(i - spec.expert_trials)};
    } else {
      const int k = i - spec.expert_trials - spec.novice_trials;
      t.operators = {expert(k), novice(k + spec.novice_trials)};
      t.subtrials_per_operator = 1;
    }
    specs.push_back(std::move(t));
  }

  cohort.trials.resize(specs.size());
  parallel_for(specs.size(), [&](std::size_t i) { cohort.trials[i] = generate_trial(specs[i], derive_seed(seed, i)); });
  return cohort;
}

std::vector<RigidTransform> generate_pivot_poses(const Vec3& tip_offset, const Vec3& pivot, std::size_t count,
                                                 double cone_deg, double noise_sigma, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<RigidTransform> poses;
  poses.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double az = 2.0 * kPi * unit(rng);
    const double tilt = cone_deg * kDeg * std::sqrt(unit(rng));
    const UnitQuaternion rot = UnitQuaternion::from_axis_angle(Vec3{std::cos(az), std::sin(az), 0.0}, tilt);
    Vec3 p = pivot - rot.rotate(tip_offset);
    if (noise_sigma > 0.0) {
      const double a = normal(rng);
      const double b = normal(rng);
      const double c = normal(rng);
      p += Vec3{a, b, c} * noise_sigma;
    }
    poses.push_back({rot, p});
  }
  return poses;
}

double PlaneSweep::theta_at(double t) const { return head_angle(head, 0.0, t); }

Plane PlaneSweep::plane_at(double t) const { return rotate_plane(initial_plane, axis.point, axis.direction, theta_at(t)); }

PlaneSweep generate_plane_sweep(const HeadMotion& head, double noise_sigma, double duration, double rate,
                                std::uint64_t seed) {
  if (!(rate > 0.0 && duration > 0.0)) throw Error(ErrorKind::BadProfile, "sweep needs rate > 0 and duration > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  PlaneSweep sweep;
  sweep.initial_plane = Plane(Vec3{}, kN);
  sweep.axis = {Vec3{}, kU};
  sweep.head = head;
  const double p1 = 2.0 * kPi * unit(rng);
  const double p2 = 2.0 * kPi * unit(rng);
  const auto n = static_cast<std::size_t>(std::lround(duration * rate));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const Vec3 on_plane = anatomy_point(
        {15.0 * std::sin(2.0 * kPi * 0.37 * t + p1), 20.0 + 12.0 * std::sin(2.0 * kPi * 0.23 * t + p2)}, 0.0);
    Vec3 p = rotate_about_axis(on_plane, sweep.axis.point, sweep.axis.direction, sweep.theta_at(t));
    if (noise_sigma > 0.0) {
      const double a = normal(rng);
      const double b = normal(rng);
      const double c = normal(rng);
      p += Vec3{a, b, c} * noise_sigma;
    }
    sweep.tips.push_back({t, p});
  }
  return sweep;
}

std::string truth_json(const SynthTruth& truth) {
  nlohmann::ordered_json j;
  j["tip_a_offset"] = vec_json(truth.tip_a_offset);
  j["tip_b_offset"] = vec_json(truth.tip_b_offset);
  j["anatomy_to_tracker"] = pose_json(truth.anatomy_to_tracker);
  j["head_sensor_mount"] = pose_json(truth.head_sensor_mount);
  j["plane"] = {{"point", vec_json(truth.plane.point())}, {"normal", vec_json(truth.plane.normal())}};
  j["head_axis"] = {{"point", vec_json(truth.head_axis.point)}, {"direction", vec_json(truth.head_axis.direction)}};
  j["head_motion"] = {{"amplitude_deg", truth.head.amplitude_deg},
                      {"frequency_hz", truth.head.frequency_hz},
                      {"start", truth.head_motion_start}};
  j["smooth_window"] = truth.smooth_window;
  nlohmann::ordered_json subs = nlohmann::ordered_json::array();
  for (const SubtrialTruth& s : truth.subtrials) {
    nlohmann::ordered_json js;
    js["operator_id"] = s.operator_id;
    js["operator_class"] = std::string(to_string(s.skill));
    js["active_tip"] = std::string(to_string(s.tip));
    js["interval"] = {s.interval.t_start, s.interval.t_end};
    js["scc"] = s.scc;
    js["sdc"] = s.sdc;
    js["cr"] = s.cr;
    js["hull_areas"] = s.hull_areas;
    nlohmann::ordered_json strokes = nlohmann::ordered_json::array();
    for (const StrokeTruth& k : s.strokes) {
      strokes.push_back({{"start_idx", k.start_idx},
                         {"end_idx", k.end_idx},
                         {"start_t", k.start_t},
                         {"end_t", k.end_t},
                         {"duration", k.duration},
                         {"target_curvature", k.target_curvature},
                         {"curvature", k.curvature},
                         {"start", {k.start.x, k.start.y}},
                         {"revisit", k.revisit}});
    }
    js["strokes"] = strokes;
    subs.push_back(js);
  }
  j["subtrials"] = subs;
  return j.dump(2) + "\n";
}

void write_truth(const SynthTruth& truth, const std::filesystem::path& bundle_dir) {
  std::filesystem::create_directories(bundle_dir);
  std::ofstream f(bundle_dir / "truth.json", std::ios::binary);
  if (!f) throw Error(ErrorKind::ParseError, fmt::format("cannot write {}", (bundle_dir / "truth.json").string()));
  f << truth_json(truth);
}

}  // namespace toolmotion
