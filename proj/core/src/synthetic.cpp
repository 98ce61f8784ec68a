#include "chartgraph/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "chartgraph/error.hpp"

namespace chartgraph {

namespace {

constexpr std::array<std::string_view, 8> kCategories = {"A", "B", "C", "D", "E", "F", "G", "H"};
constexpr std::array<std::string_view, 4> kSeries = {"red", "blue", "green", "orange"};
constexpr std::array<std::string_view, 4> kTitles = {"Sales", "Revenue", "Survey results", "Budget"};

// Plot area shared by bar and line charts (normalized, y grows downward).
constexpr double kPlotTop = 0.10;
constexpr double kPlotBottom = 0.85;

double value_to_y(double v) { return kPlotBottom - v / 100.0 * (kPlotBottom - kPlotTop); }

BBox clamp_box(double x0, double y0, double x1, double y1) {
  auto c = [](double v) { return std::clamp(v, 0.0, 1.0); };
  return {c(x0), c(y0), c(x1), c(y1)};
}

class Builder {
 public:
  explicit Builder(Rng& rng) : rng_(rng) {}

  ObjectId add(ObjectClass cls, BBox box, std::optional<std::string> ocr = std::nullopt) {
    ChartObject o;
    o.id = next_id_++;
    o.cls = cls;
    o.bbox = box;
    o.confidence = rng_.uniform(0.5, 1.0);
    o.ocr_text = std::move(ocr);
    objects_.push_back(std::move(o));
    return objects_.back().id;
  }

  std::vector<ChartObject> take() { return std::move(objects_); }

 private:
  Rng& rng_;
  ObjectId next_id_ = 0;
  std::vector<ChartObject> objects_;
};

template <typename Range>
std::vector<std::string> pick_distinct(Rng& rng, const Range& pool, std::size_t k) {
  std::vector<std::string> items(pool.begin(), pool.end());
  for (std::size_t i = 0; i < k; ++i) std::swap(items[i], items[i + rng.below(items.size() - i)]);
  items.resize(k);
  return items;
}

int random_decile(Rng& rng, int lo, int hi) { return rng.between(lo, hi) * 10; }

void add_value_axes(Builder& b, const std::string& x_title) {
  for (int t = 0; t <= 100; t += 10) {
    const double y = value_to_y(t);
    b.add(ObjectClass::YAxisLabel, clamp_box(0.08, y - 0.012, 0.13, y + 0.012), std::to_string(t));
  }
  b.add(ObjectClass::XAxisTitle, {0.45, 0.93, 0.65, 0.97}, x_title);
  b.add(ObjectClass::YAxisTitle, {0.01, 0.35, 0.05, 0.65}, "Value");
}

void generate_bar(Rng& rng, std::size_t n, Builder& b, ChartSample& s, const Vocabulary& vocab) {
  const auto cats = pick_distinct(rng, kCategories, n);
  std::vector<int> values(n);
  for (auto& v : values) v = random_decile(rng, 1, 9);
  const double left = 0.15;
  const double slot = (0.95 - left) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = left + static_cast<double>(i) * slot + 0.2 * slot;
    const double x1 = x0 + 0.6 * slot;
    b.add(ObjectClass::Bar, {x0, value_to_y(values[i]), x1, kPlotBottom});
    b.add(ObjectClass::XAxisLabel, {x0, 0.87, x1, 0.91}, cats[i]);
  }
  add_value_axes(b, "Category");
  const std::size_t k = rng.below(n);
  s.question_tokens = {vocab.id("value"), vocab.id("of"), vocab.id(cats[k])};
  s.answer_text = std::to_string(values[k]);
}

void generate_line(Rng& rng, std::size_t n, Builder& b, ChartSample& s, const Vocabulary& vocab) {
  constexpr std::size_t kPoints = 5;
  const double left = 0.15;
  const double slot = (0.78 - left) / static_cast<double>(kPoints);
  const double first_x = left + 0.5 * slot;
  const double last_x = left + (static_cast<double>(kPoints) - 0.5) * slot;
  const auto names = pick_distinct(rng, kSeries, n);

  int overall_max = 0;
  for (std::size_t sidx = 0; sidx < n; ++sidx) {
    std::array<int, kPoints> ys{};
    do {
      for (auto& v : ys) v = random_decile(rng, 1, 9);
    } while (*std::min_element(ys.begin(), ys.end()) == *std::max_element(ys.begin(), ys.end()));
    const int hi = *std::max_element(ys.begin(), ys.end());
    const int lo = *std::min_element(ys.begin(), ys.end());
    overall_max = std::max(overall_max, hi);
    const ObjectClass cls = rng.bernoulli(0.25) ? ObjectClass::DotLine : ObjectClass::Line;
    b.add(cls, {first_x, value_to_y(hi), last_x, value_to_y(lo)});
  }
  for (std::size_t p = 0; p < kPoints; ++p) {
    const double xc = left + (static_cast<double>(p) + 0.5) * slot;
    b.add(ObjectClass::XAxisLabel, {xc - 0.03, 0.87, xc + 0.03, 0.91}, std::string(kCategories[p]));
  }
  add_value_axes(b, "Period");
  for (std::size_t sidx = 0; sidx < n; ++sidx) {
    const double ym = 0.15 + 0.07 * static_cast<double>(sidx);
    b.add(ObjectClass::LegendMarker, {0.82, ym - 0.008, 0.85, ym + 0.008});
    b.add(ObjectClass::LegendLabel, {0.86, ym - 0.015, 0.97, ym + 0.015}, names[sidx]);
  }
  s.question_tokens = {vocab.id("highest"), vocab.id("value")};
  s.answer_text = std::to_string(overall_max);
}

// Angles run clockwise from 12 o'clock.
BBox wedge_box(double cx, double cy, double r, double a0, double a1) {
  auto px = [&](double a) { return cx + r * std::sin(a); };
  auto py = [&](double a) { return cy - r * std::cos(a); };
  double x0 = cx, x1 = cx, y0 = cy, y1 = cy;
  auto include = [&](double a) {
    x0 = std::min(x0, px(a));
    x1 = std::max(x1, px(a));
    y0 = std::min(y0, py(a));
    y1 = std::max(y1, py(a));
  };
  include(a0);
  include(a1);
  for (int q = 0; q <= 4; ++q) {
    const double a = q * std::numbers::pi / 2.0;
    if (a > a0 && a < a1) include(a);
  }
  return clamp_box(x0, y0, x1, y1);
}

void generate_pie(Rng& rng, std::size_t n, Builder& b, ChartSample& s, const Vocabulary& vocab) {
  if (n > 10) throw Error(ErrorCode::InvalidConfig, "pie charts support at most 10 slices");
  const auto cats = pick_distinct(rng, kCategories, std::min<std::size_t>(n, kCategories.size()));
  if (cats.size() < n) throw Error(ErrorCode::InvalidConfig, "pie charts support at most 8 labelled slices");
  // Shares in tenths, each >= 1, summing to 10.
  std::vector<int> tenths(n, 1);
  for (std::size_t rest = 10 - n; rest > 0; --rest) ++tenths[rng.below(n)];

  const double cx = 0.45, cy = 0.52, r = 0.30;
  b.add(ObjectClass::Pie, {cx - r, cy - r, cx + r, cy + r});
  double angle = 0.0;
  std::vector<double> mids;
  for (std::size_t i = 0; i < n; ++i) {
    const double sweep = 2.0 * std::numbers::pi * tenths[i] / 10.0;
    b.add(ObjectClass::PieSlice, wedge_box(cx, cy, r, angle, angle + sweep));
    mids.push_back(angle + 0.5 * sweep);
    angle += sweep;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = cx + (r + 0.07) * std::sin(mids[i]);
    const double ly = cy - (r + 0.07) * std::cos(mids[i]);
    b.add(ObjectClass::PieLabel, clamp_box(lx - 0.05, ly - 0.02, lx + 0.05, ly + 0.02),
          cats[i] + " " + std::to_string(tenths[i] * 10) + "%");
  }
  const std::size_t k = rng.below(n);
  s.question_tokens = {vocab.id("share"), vocab.id("of"), vocab.id(cats[k])};
  s.answer_text = std::to_string(tenths[k] * 10);
}

}  // namespace

// ---- vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary() {
  tokens_ = {"<pad>", "<bos>", "<eos>", "value", "of", "share", "highest"};
  for (auto c : kCategories) tokens_.emplace_back(c);
  for (int v = 0; v <= 100; v += 10) tokens_.push_back(std::to_string(v));
  for (auto c : kAllObjectClasses) tokens_.emplace_back(class_name(c));
}

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary vocab;
  return vocab;
}

std::string_view Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw Error(ErrorCode::IndexOutOfVocab, "token id " + std::to_string(id));
  return tokens_[id];
}

TokenId Vocabulary::id(std::string_view word) const {
  auto it = std::find(tokens_.begin(), tokens_.end(), word);
  if (it == tokens_.end()) throw Error(ErrorCode::IndexOutOfVocab, "word '" + std::string(word) + "'");
  return static_cast<TokenId>(it - tokens_.begin());
}

bool Vocabulary::contains(std::string_view word) const noexcept {
  return std::find(tokens_.begin(), tokens_.end(), word) != tokens_.end();
}

std::string Vocabulary::detokenize(const std::vector<TokenId>& ids) const {
  std::string out;
  for (TokenId t : ids) {
    if (t == eos()) break;
    if (!out.empty()) out.push_back(' ');
    out += token(t);
  }
  return out;
}

std::string_view to_string(ChartType t) noexcept {
  switch (t) {
    case ChartType::Bar: return "bar";
    case ChartType::Line: return "line";
    case ChartType::Pie: return "pie";
  }
  return "unknown";
}

// ---- generator ----------------------------------------------------------------

ChartSample generate_synthetic_chart(Rng& rng, const ChartSpec& spec) {
  if (spec.n_elements == 0) throw Error(ErrorCode::InvalidConfig, "n_elements must be >= 1");
  const Vocabulary& vocab = Vocabulary::standard();
  ChartSample s;
  Builder b(rng);
  b.add(ObjectClass::ChartTitle, {0.25, 0.01, 0.75, 0.06},
        std::string(kTitles[rng.below(kTitles.size())]));
  switch (spec.type) {
    case ChartType::Bar:
      if (spec.n_elements > kCategories.size()) throw Error(ErrorCode::InvalidConfig, "at most 8 bars");
      generate_bar(rng, spec.n_elements, b, s, vocab);
      break;
    case ChartType::Line:
      if (spec.n_elements > kSeries.size()) throw Error(ErrorCode::InvalidConfig, "at most 4 line series");
      generate_line(rng, spec.n_elements, b, s, vocab);
      break;
    case ChartType::Pie:
      generate_pie(rng, spec.n_elements, b, s, vocab);
      break;
  }
  s.annotation.chart_id = std::string(to_string(spec.type)) + "-" + std::to_string(rng.next_u64() % 1000000000ULL);
  s.annotation.image_size = {800, 600};
  s.annotation.objects = b.take();
  s.answer_tokens = {vocab.id(s.answer_text), vocab.eos()};
  return s;
}

// ---- pseudo-encoder -------------------------------------------------------------

PseudoEncoder::PseudoEncoder(std::uint64_t seed, std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidConfig, "encoder dim must be positive");
  Rng rng(seed);
  patch_projection_ = Matrix(kObjectClassCount, dim);
  for (double& v : patch_projection_.values()) v = rng.uniform(-1.0, 1.0);
  roi_projection_ = Matrix(kObjectClassCount + 4, dim);
  for (double& v : roi_projection_.values()) v = rng.uniform(-1.0, 1.0);
}

Matrix PseudoEncoder::occupancy(const ChartAnnotation& a, const PatchGrid& grid) {
  Matrix occ(grid.size(), kObjectClassCount);
  for (const auto& o : a.objects) {
    for (std::size_t p : patch_alignment(o.bbox, grid)) {
      const BBox cell = grid.cell(p);
      const double w = std::min(o.bbox.x_max, cell.x_max) - std::max(o.bbox.x_min, cell.x_min);
      const double h = std::min(o.bbox.y_max, cell.y_max) - std::max(o.bbox.y_min, cell.y_min);
      if (w > 0.0 && h > 0.0) occ(p, static_cast<std::size_t>(o.cls)) += (w * h) / cell.area();
    }
  }
  return occ;
}

Matrix PseudoEncoder::encode_patches(const ChartAnnotation& a, const PatchGrid& grid) const {
  return matmul(occupancy(a, grid), patch_projection_);
}

Matrix PseudoEncoder::encode_rois(const ChartAnnotation& a) const {
  const RoiSelection sel = select_rois(a.objects);
  const auto kept = roi_objects(a.objects, sel);
  Matrix features(kRoiSlots, kObjectClassCount + 4);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    features(i, static_cast<std::size_t>(kept[i].cls)) = 1.0;
    features(i, kObjectClassCount + 0) = kept[i].bbox.x_min;
    features(i, kObjectClassCount + 1) = kept[i].bbox.y_min;
    features(i, kObjectClassCount + 2) = kept[i].bbox.x_max;
    features(i, kObjectClassCount + 3) = kept[i].bbox.y_max;
  }
  return matmul(features, roi_projection_);
}

}  // namespace chartgraph
