#include "dtl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dtl/error.hpp"
#include "dtl/rng.hpp"

namespace dtl {

namespace {

struct Point {
  double x, y;
};

struct Segment {
  Point a, b;
};

struct Glyph {
  std::vector<Segment> segments;
  std::vector<double> ring_radii;  // circle outlines centered at the origin
  double fill_radius = 0.0;        // filled disk
  double fill_half_side = 0.0;     // filled square
};

double segment_distance(Point p, const Segment& s) {
  const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = p.x - (s.a.x + t * dx), ey = p.y - (s.a.y + t * dy);
  return std::sqrt(ex * ex + ey * ey);
}

std::vector<Segment> polygon(std::vector<Point> pts) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({pts[i], pts[(i + 1) % pts.size()]});
  return out;
}

Glyph glyph_for(const std::string& name) {
  Glyph g;
  if (name == "circle") {
    g.ring_radii = {0.6};
  } else if (name == "disk") {
    g.fill_radius = 0.55;
  } else if (name == "square") {
    g.segments = polygon({{-0.6, -0.6}, {0.6, -0.6}, {0.6, 0.6}, {-0.6, 0.6}});
  } else if (name == "box") {
    g.fill_half_side = 0.5;
  } else if (name == "triangle") {
    g.segments = polygon({{0.0, -0.7}, {0.65, 0.5}, {-0.65, 0.5}});
  } else if (name == "cross") {
    g.segments = {{{-0.7, 0.0}, {0.7, 0.0}}, {{0.0, -0.7}, {0.0, 0.7}}};
  } else if (name == "x") {
    g.segments = {{{-0.6, -0.6}, {0.6, 0.6}}, {{-0.6, 0.6}, {0.6, -0.6}}};
  } else if (name == "hbar") {
    g.segments = {{{-0.7, 0.0}, {0.7, 0.0}}};
  } else if (name == "vbar") {
    g.segments = {{{0.0, -0.7}, {0.0, 0.7}}};
  } else if (name == "diag") {
    g.segments = {{{-0.6, -0.6}, {0.6, 0.6}}};
  } else if (name == "antidiag") {
    g.segments = {{{-0.6, 0.6}, {0.6, -0.6}}};
  } else if (name == "ring2") {
    g.ring_radii = {0.3, 0.7};
  } else if (name == "corner") {
    g.segments = {{{-0.5, -0.6}, {-0.5, 0.5}}, {{-0.5, 0.5}, {0.6, 0.5}}};
  } else if (name == "tee") {
    g.segments = {{{-0.6, -0.55}, {0.6, -0.55}}, {{0.0, -0.55}, {0.0, 0.65}}};
  } else if (name == "chevron") {
    g.segments = {{{-0.6, -0.4}, {0.0, 0.4}}, {{0.0, 0.4}, {0.6, -0.4}}};
  } else if (name == "zigzag") {
    g.segments = {{{-0.65, -0.3}, {-0.2, 0.3}}, {{-0.2, 0.3}, {0.2, -0.3}}, {{0.2, -0.3}, {0.65, 0.3}}};
  } else {
    throw InvalidArgument("unknown synthetic pattern '" + name + "'");
  }
  return g;
}

// Distance from p to the glyph's ink; 0 inside filled regions.
double glyph_distance(const Glyph& g, Point p) {
  double d = 1e9;
  for (const auto& s : g.segments) d = std::min(d, segment_distance(p, s));
  const double r = std::sqrt(p.x * p.x + p.y * p.y);
  for (double radius : g.ring_radii) d = std::min(d, std::abs(r - radius));
  if (g.fill_radius > 0.0) d = std::min(d, std::max(0.0, r - g.fill_radius));
  if (g.fill_half_side > 0.0) d = std::min(d, std::max(0.0, std::max(std::abs(p.x), std::abs(p.y)) - g.fill_half_side));
  return d;
}

}  // namespace

const std::vector<std::string>& pattern_names() {
  static const std::vector<std::string> names = {"circle", "disk", "square", "box",   "triangle", "cross",
                                                 "x",      "hbar", "vbar",   "diag",  "antidiag", "ring2",
                                                 "corner", "tee",  "chevron", "zigzag"};
  return names;
}

void SyntheticSpec::validate() const {
  if (patterns.size() < 2) throw InvalidArgument("a synthetic spec needs at least 2 classes");
  if (samples_per_class.size() != patterns.size()) {
    throw InvalidArgument("samples_per_class has " + std::to_string(samples_per_class.size()) + " entries for " +
                          std::to_string(patterns.size()) + " patterns");
  }
  for (std::size_t n : samples_per_class) {
    if (n == 0) throw InvalidArgument("every class needs at least one sample");
  }
  for (const auto& p : patterns) glyph_for(p);
  if (image_size < 8) throw InvalidArgument("synthetic images must be at least 8 pixels wide");
  if (!(noise_level >= 0.0 && noise_level <= 1.0)) throw InvalidArgument("noise_level must lie in [0, 1]");
  if (!(domain_shift >= 0.0 && domain_shift <= 1.0)) throw InvalidArgument("domain_shift must lie in [0, 1]");
}

LabelledDataset synthesize(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<Glyph> glyphs;
  for (const auto& p : spec.patterns) glyphs.push_back(glyph_for(p));

  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < spec.samples_per_class.size(); ++c) labels.insert(labels.end(), spec.samples_per_class[c], c);
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(labels));

  const std::size_t size = spec.image_size;
  const double shift = spec.domain_shift;
  const double pixel = 2.0 / static_cast<double>(size);
  Tensor images({labels.size(), 1, size, size});
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const Glyph& g = glyphs[labels[n]];
    const double angle = rng.uniform(-0.2, 0.2) + shift * std::numbers::pi / 3.5;
    const double scale = rng.uniform(0.75, 1.0);
    const double tx = rng.uniform(-0.15, 0.15), ty = rng.uniform(-0.15, 0.15);
    const double thickness = 0.11 * (1.0 + 0.8 * shift) * rng.uniform(0.8, 1.2);
    const double ink = 1.0 - 0.35 * shift;
    const double stripe_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double ca = std::cos(angle), sa = std::sin(angle);
    double* out = images.data() + n * size * size;
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double u = (static_cast<double>(x) + 0.5) * pixel - 1.0;
        const double v = (static_cast<double>(y) + 0.5) * pixel - 1.0;
        // inverse of rotate-scale-translate
        const double du = (u - tx) / scale, dv = (v - ty) / scale;
        const Point p{ca * du + sa * dv, -sa * du + ca * dv};
        const double d = glyph_distance(g, p) * scale;
        const double coverage = std::clamp((thickness - d) / pixel + 0.5, 0.0, 1.0);
        const double background = 0.35 * shift * (0.5 + 0.5 * std::sin(9.0 * (u + 0.5 * v) + stripe_phase));
        double value = std::max(background, ink * coverage);
        if (spec.noise_level > 0.0) value += spec.noise_level * rng.normal();
        out[y * size + x] = std::clamp(value, 0.0, 1.0);
      }
    }
  }
  return LabelledDataset(std::move(images), std::move(labels), spec.patterns.size());
}

std::pair<LabelledDataset, LabelledDataset> synthesize_pair(const SyntheticSpec& primary, const SyntheticSpec& target) {
  return {synthesize(primary), synthesize(target)};
}

}  // namespace dtl
