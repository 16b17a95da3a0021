#include "ocular/stream.hpp"

#include "ocular/error.hpp"
#include "ocular/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

namespace ocular {

std::string_view to_string(ThresholdMethod m) {
  return m == ThresholdMethod::Fixed ? "fixed" : "otsu";
}

ThresholdMethod threshold_method_from_string(std::string_view s) {
  if (s == "fixed") return ThresholdMethod::Fixed;
  if (s == "otsu") return ThresholdMethod::Otsu;
  throw Error(ErrorKind::InvalidManifest, "unknown threshold method '" + std::string(s) + "'");
}

std::string_view to_string(Polarity p) {
  return p == Polarity::DarkObject ? "dark-object" : "bright-object";
}

Polarity polarity_from_string(std::string_view s) {
  if (s == "dark-object") return Polarity::DarkObject;
  if (s == "bright-object") return Polarity::BrightObject;
  throw Error(ErrorKind::InvalidManifest, "unknown polarity '" + std::string(s) + "'");
}

std::string_view to_string(LossReason r) {
  switch (r) {
    case LossReason::MissingView: return "missing-view";
    case LossReason::Ambiguous: return "ambiguous";
    case LossReason::BorderOnly: return "border-only";
    case LossReason::TooSmall: return "too-small";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Binarization

std::optional<int> otsu_threshold(const std::array<std::uint64_t, 256>& hist) {
  double n = 0, sum = 0;
  for (int i = 0; i < 256; ++i) {
    n += static_cast<double>(hist[i]);
    sum += i * static_cast<double>(hist[i]);
  }
  double n0 = 0, s0 = 0, best = -1;
  int best_t = -1;
  for (int t = 1; t < 256; ++t) {
    n0 += static_cast<double>(hist[t - 1]);
    s0 += (t - 1) * static_cast<double>(hist[t - 1]);
    const double n1 = n - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double d = s0 / n0 - (sum - s0) / n1;
    const double between = n0 * n1 * d * d;
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  if (best_t < 0) return std::nullopt;
  return best_t;
}

Binarization binarize(const GrayImage& image, const ThresholdConfig& config, Polarity polarity) {
  Binarization out;
  out.mask = BinaryMask(image.width, image.height);
  int t = config.value;
  if (config.method == ThresholdMethod::Otsu) {
    std::array<std::uint64_t, 256> hist{};
    for (auto p : image.pixels) ++hist[p];
    const auto ot = otsu_threshold(hist);
    if (!ot) {
      out.warning = "degenerate histogram: single-valued image";
      return out;
    }
    t = *ot;
    double n0 = 0, s0 = 0, n1 = 0, s1 = 0;
    for (int i = 0; i < 256; ++i) {
      const double h = static_cast<double>(hist[i]);
      if (i < t) {
        n0 += h;
        s0 += i * h;
      } else {
        n1 += h;
        s1 += i * h;
      }
    }
    if (s1 / n1 - s0 / n0 < config.otsu_min_contrast) {
      out.threshold = t;
      out.warning = "degenerate histogram: Otsu classes closer than the minimum contrast";
      return out;
    }
  }
  out.threshold = t;
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const bool dark = image.pixels[i] < t;
    out.mask.bits[i] = (polarity == Polarity::DarkObject) == dark ? 1 : 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labeling and denoise

namespace {

// Flood labels with the given neighbourhood; returns the component count.
template <class Pred>
int flood_label(int w, int h, Pred on, bool eight, std::vector<int>& labels) {
  labels.assign(static_cast<std::size_t>(w) * h, 0);
  int next = 0;
  std::vector<int> stack;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const int idx = v * w + u;
      if (!on(idx) || labels[idx] != 0) continue;
      labels[idx] = ++next;
      stack.push_back(idx);
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cu = cur % w, cv = cur / w;
        for (int dv = -1; dv <= 1; ++dv)
          for (int du = -1; du <= 1; ++du) {
            if (du == 0 && dv == 0) continue;
            if (!eight && du != 0 && dv != 0) continue;
            const int nu = cu + du, nv = cv + dv;
            if (nu < 0 || nv < 0 || nu >= w || nv >= h) continue;
            const int n = nv * w + nu;
            if (on(n) && labels[n] == 0) {
              labels[n] = next;
              stack.push_back(n);
            }
          }
      }
    }
  return next;
}

}  // namespace

int label_components(const BinaryMask& mask, std::vector<int>& labels) {
  return flood_label(mask.width, mask.height, [&](int i) { return mask.bits[i] != 0; }, true,
                     labels);
}

namespace {

// Separable window over offsets [lo, hi] on both axes: `all` gives erosion
// (outside counts as background), otherwise dilation.
BinaryMask window_pass(const BinaryMask& m, int lo, int hi, bool all) {
  const int w = m.width, h = m.height;
  BinaryMask row(w, h), out(w, h);
  auto scan = [&](const BinaryMask& src, BinaryMask& dst, bool horizontal) {
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        bool acc = all;
        for (int d = lo; d <= hi; ++d) {
          const int uu = horizontal ? u + d : u, vv = horizontal ? v : v + d;
          const bool in = uu >= 0 && vv >= 0 && uu < w && vv < h && src.at(uu, vv);
          acc = all ? (acc && in) : (acc || in);
        }
        dst.set(u, v, acc);
      }
  };
  scan(m, row, true);
  scan(row, out, false);
  return out;
}

}  // namespace

BinaryMask morphological_open(const BinaryMask& mask, int size) {
  if (size < 1) throw Error(ErrorKind::OutOfRange, "opening size must be >= 1");
  if (size == 1) return mask;
  // Erosion marks the top-left corners of windows that fit; dilation paints
  // every window from its corner.
  return window_pass(window_pass(mask, 0, size - 1, true), 1 - size, 0, false);
}

BinaryMask denoise(const BinaryMask& mask, int min_area, bool fill_holes, int opening) {
  std::vector<int> labels;
  const int n = label_components(morphological_open(mask, opening), labels);
  std::vector<std::size_t> area(static_cast<std::size_t>(n) + 1, 0);
  for (int l : labels) ++area[l];
  BinaryMask out(mask.width, mask.height);
  for (std::size_t i = 0; i < labels.size(); ++i)
    out.bits[i] = labels[i] != 0 && area[labels[i]] >= static_cast<std::size_t>(min_area) ? 1 : 0;
  if (!fill_holes) return out;

  std::vector<int> bg;
  const int nb = flood_label(out.width, out.height, [&](int i) { return out.bits[i] == 0; },
                             false, bg);
  std::vector<char> reaches_border(static_cast<std::size_t>(nb) + 1, 0);
  for (int v = 0; v < out.height; ++v)
    for (int u = 0; u < out.width; ++u)
      if (u == 0 || v == 0 || u == out.width - 1 || v == out.height - 1)
        reaches_border[bg[v * out.width + u]] = 1;
  for (std::size_t i = 0; i < bg.size(); ++i)
    if (bg[i] != 0 && !reaches_border[bg[i]]) out.bits[i] = 1;
  return out;
}

// ---------------------------------------------------------------------------
// Detection

std::vector<DetectedObject> detect(const Frame& frame, const DetectionConfig& config,
                                   std::vector<std::string>* warnings) {
  if (!(frame.pitch > 0.0)) throw Error(ErrorKind::OutOfRange, "frame pitch must be positive");
  Binarization bin = binarize(frame.image, config.threshold, config.polarity);
  if (bin.warning && warnings) {
    warnings->push_back(std::string(to_string(frame.view)) + " frame " +
                        std::to_string(frame.index) + ": " + *bin.warning);
  }
  const BinaryMask clean = denoise(bin.mask, config.min_area, config.fill_holes, config.opening);
  std::vector<int> labels;
  const int n = label_components(clean, labels);
  const int w = clean.width, h = clean.height;
  const int margin = config.opening / 2;

  std::vector<DetectedObject> objs(static_cast<std::size_t>(n));
  std::vector<double> su(n, 0.0), sv(n, 0.0);
  for (int k = 0; k < n; ++k) {
    auto& o = objs[k];
    o.view = frame.view;
    o.frame_index = frame.index;
    o.timestamp_us = frame.timestamp_us;
    o.id = k;
    o.u0 = w;
    o.v0 = h;
    o.u1 = o.v1 = 0;
  }
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const int l = labels[v * w + u];
      if (l == 0) continue;
      auto& o = objs[l - 1];
      o.u0 = std::min(o.u0, u);
      o.v0 = std::min(o.v0, v);
      o.u1 = std::max(o.u1, u + 1);
      o.v1 = std::max(o.v1, v + 1);
      ++o.area;
      su[l - 1] += u + 0.5;
      sv[l - 1] += v + 0.5;
    }
  for (int k = 0; k < n; ++k) {
    auto& o = objs[k];
    o.centroid_u = su[k] / static_cast<double>(o.area);
    o.centroid_v = sv[k] / static_cast<double>(o.area);
    // The opening can shave up to `margin` pixels off a sliver cut by the
    // frame edge, so anything that close counts as touching it.
    o.touches_border = o.u0 <= margin || o.v0 <= margin || o.u1 >= w - margin || o.v1 >= h - margin;
    Silhouette s(o.u1 - o.u0, o.v1 - o.v0, frame.pitch, frame.view);
    for (int v = o.v0; v < o.v1; ++v)
      for (int u = o.u0; u < o.u1; ++u)
        if (labels[v * w + u] == k + 1) s.set(u - o.u0, v - o.v0);
    o.mask = std::move(s);
  }
  return objs;
}

// ---------------------------------------------------------------------------
// Tracking

namespace {

struct ViewAxes {
  int u, v, depth;
};

constexpr ViewAxes axes_of(View view) {
  switch (view) {
    case View::A: return {1, 2, 0};
    case View::B: return {0, 2, 1};
    case View::C: return {0, 1, 2};
  }
  return {0, 1, 2};
}

}  // namespace

std::optional<int> flow_pixel_axis(View view, Axis flow) {
  const ViewAxes ax = axes_of(view);
  const int k = static_cast<int>(flow);
  if (ax.u == k) return 0;
  if (ax.v == k) return 1;
  return std::nullopt;
}

std::vector<Track> track_objects(const std::vector<std::vector<DetectedObject>>& frames,
                                 View view, Axis flow, const TrackingConfig& config) {
  const auto axis = flow_pixel_axis(view, flow);
  struct Active {
    std::size_t track;
    double vel;
    bool has_vel;
  };
  std::vector<Track> tracks;
  std::vector<Active> active;
  int last_frame = std::numeric_limits<int>::min();

  for (const auto& dets : frames) {
    if (dets.empty()) continue;
    const int f = dets.front().frame_index;
    for (const auto& d : dets) {
      if (d.frame_index != f) {
        throw Error(ErrorKind::OrderViolation, "mixed frame indices in one detection list");
      }
    }
    if (f <= last_frame) {
      throw Error(ErrorKind::OrderViolation,
                  "frame " + std::to_string(f) + " after " + std::to_string(last_frame));
    }
    last_frame = f;

    // Retire tracks that missed more than max_gap frames.
    std::erase_if(active, [&](const Active& a) {
      return f - tracks[a.track].objects.back().frame_index - 1 > config.max_gap;
    });

    struct Pair {
      double d;
      int obj;
      int track;
      std::size_t slot;
      std::size_t k;
    };
    std::vector<Pair> pairs;
    for (std::size_t s = 0; s < active.size(); ++s) {
      const Track& t = tracks[active[s].track];
      const DetectedObject& last = t.objects.back();
      double pu = last.centroid_u, pv = last.centroid_v;
      if (axis) {
        const double vel = active[s].has_vel ? active[s].vel : config.initial_velocity_px;
        (*axis == 0 ? pu : pv) += vel * (f - last.frame_index);
      }
      for (std::size_t k = 0; k < dets.size(); ++k) {
        const double dist = std::hypot(dets[k].centroid_u - pu, dets[k].centroid_v - pv);
        if (dist <= config.gating_px) pairs.push_back({dist, dets[k].id, t.id, s, k});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      return std::tie(a.d, a.obj, a.track) < std::tie(b.d, b.obj, b.track);
    });
    std::vector<char> obj_used(dets.size(), 0), slot_used(active.size(), 0);
    std::vector<int> assigned(dets.size(), -1);
    for (const auto& p : pairs) {
      if (obj_used[p.k] || slot_used[p.slot]) continue;
      obj_used[p.k] = slot_used[p.slot] = 1;
      assigned[p.k] = static_cast<int>(p.slot);
    }
    for (std::size_t k = 0; k < dets.size(); ++k) {
      if (assigned[k] >= 0) {
        Active& a = active[assigned[k]];
        Track& t = tracks[a.track];
        const DetectedObject& last = t.objects.back();
        if (axis) {
          const double prev = *axis == 0 ? last.centroid_u : last.centroid_v;
          const double now = *axis == 0 ? dets[k].centroid_u : dets[k].centroid_v;
          a.vel = (now - prev) / (f - last.frame_index);
          a.has_vel = true;
        }
        t.objects.push_back(dets[k]);
      } else {
        Track t;
        t.id = static_cast<int>(tracks.size());
        t.view = view;
        t.objects.push_back(dets[k]);
        tracks.push_back(std::move(t));
        active.push_back({tracks.size() - 1, 0.0, false});
      }
    }
  }

  for (auto& t : tracks) {
    if (!axis || t.objects.size() < 2) continue;
    const auto& a = t.objects.front();
    const auto& b = t.objects.back();
    const double da = *axis == 0 ? a.centroid_u : a.centroid_v;
    const double db = *axis == 0 ? b.centroid_u : b.centroid_v;
    t.velocity_px = (db - da) / (b.frame_index - a.frame_index);
  }
  return tracks;
}

// ---------------------------------------------------------------------------
// Matching

namespace {

// World interval of a detection along world axis k (micrometres).
std::pair<double, double> world_interval(const DetectedObject& o, int k) {
  const ViewAxes ax = axes_of(o.view);
  const double p = o.mask.pitch();
  if (ax.u == k) return {o.u0 * p, o.u1 * p};
  if (ax.v == k) return {o.v0 * p, o.v1 * p};
  throw Error(ErrorKind::DimensionMismatch, "view does not image this axis");
}

int shared_axis(View x, View y) {
  return 3 - axes_of(x).depth - axes_of(y).depth;
}

bool agree(const DetectedObject& x, const DetectedObject& y, Axis flow, const MatchingConfig& cfg) {
  const int k = shared_axis(x.view, y.view);
  const auto [xl, xh] = world_interval(x, k);
  const auto [yl, yh] = world_interval(y, k);
  const double tol = k == static_cast<int>(flow) ? cfg.flow_tolerance_um
                                                  : cfg.transverse_tolerance_um;
  // Both ends: a silhouette cut by the border must not match one that is
  // merely centred nearby.
  return std::max(std::abs(xl - yl), std::abs(xh - yh)) <= tol;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

struct Slot {
  int track;
  const DetectedObject* obj;
};

struct Triple {
  int frame;
  std::array<Slot, 3> s;
  bool ambiguous = false;
};

}  // namespace

TriProjection assemble_triprojection(const DetectedObject& a, const DetectedObject& b,
                                     const DetectedObject& c) {
  if (a.view != View::A || b.view != View::B || c.view != View::C) {
    throw Error(ErrorKind::DimensionMismatch, "assemble_triprojection expects views A, B, C");
  }
  const std::array<const DetectedObject*, 3> obj{&a, &b, &c};
  const double pitch = (a.mask.pitch() + b.mask.pitch() + c.mask.pitch()) / 3.0;
  Vec3 origin;
  std::array<int, 3> n{};
  for (int k = 0; k < 3; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* o : obj) {
      if (axes_of(o->view).depth == k) continue;
      const auto [l, h] = world_interval(*o, k);
      lo = std::min(lo, l);
      hi = std::max(hi, h);
    }
    origin[k] = lo;
    n[k] = std::max(1, static_cast<int>(std::ceil((hi - lo) / pitch - 1e-6)));
  }
  auto resample = [&](const DetectedObject& o) {
    const ViewAxes ax = axes_of(o.view);
    Silhouette s(n[ax.u], n[ax.v], pitch, o.view);
    const double sp = o.mask.pitch();
    for (int j = 0; j < s.height(); ++j) {
      const int sv =
          static_cast<int>(std::floor((origin[ax.v] + (j + 0.5) * pitch) / sp)) - o.v0;
      if (sv < 0 || sv >= o.mask.height()) continue;
      for (int i = 0; i < s.width(); ++i) {
        const int su =
            static_cast<int>(std::floor((origin[ax.u] + (i + 0.5) * pitch) / sp)) - o.u0;
        if (su >= 0 && su < o.mask.width() && o.mask.at(su, sv)) s.set(i, j);
      }
    }
    return s;
  };
  TriProjection tp{resample(a), resample(b), resample(c), pitch, origin};
  validate(tp);
  return tp;
}

MatchResult match_views(const std::array<std::vector<Track>, 3>& tracks, Axis flow,
                        const MatchingConfig& config) {
  // Global track keys: view-major.
  std::array<int, 3> base{0, 0, 0};
  for (int v = 1; v < 3; ++v) base[v] = base[v - 1] + static_cast<int>(tracks[v - 1].size());
  const int total = base[2] + static_cast<int>(tracks[2].size());
  auto key = [&](int v, int t) { return base[v] + t; };
  auto view_of = [&](int k) { return k >= base[2] ? 2 : (k >= base[1] ? 1 : 0); };

  // Frame -> detections per view.
  std::map<int, std::array<std::vector<Slot>, 3>> by_frame;
  for (int v = 0; v < 3; ++v)
    for (std::size_t t = 0; t < tracks[v].size(); ++t)
      for (const auto& o : tracks[v][t].objects)
        by_frame[o.frame_index][v].push_back({static_cast<int>(t), &o});

  auto in_sync = [&](const DetectedObject& x, const DetectedObject& y) {
    return std::abs(x.timestamp_us - y.timestamp_us) <= config.sync_tolerance_us;
  };

  std::vector<Triple> triples;
  for (const auto& [f, views] : by_frame) {
    // Only complete silhouettes take part: extents cut by the border can line
    // up by accident. Since the three views image the same region, A and B
    // inside the frame also means C is not seeing a partial section.
    const std::size_t first = triples.size();
    for (const auto& a : views[0])
      for (const auto& b : views[1]) {
        if (a.obj->touches_border || b.obj->touches_border) continue;
        if (!in_sync(*a.obj, *b.obj) || !agree(*a.obj, *b.obj, flow, config)) continue;
        for (const auto& c : views[2]) {
          if (c.obj->touches_border) continue;
          if (!in_sync(*a.obj, *c.obj) || !in_sync(*b.obj, *c.obj)) continue;
          if (agree(*a.obj, *c.obj, flow, config) && agree(*b.obj, *c.obj, flow, config))
            triples.push_back({f, {a, b, c}});
        }
      }
    // A detection in two triples of the same frame makes both ambiguous.
    std::map<const DetectedObject*, int> uses;
    for (std::size_t i = first; i < triples.size(); ++i)
      for (int v = 0; v < 3; ++v) ++uses[triples[i].s[v].obj];
    for (std::size_t i = first; i < triples.size(); ++i)
      for (int v = 0; v < 3; ++v)
        if (uses[triples[i].s[v].obj] > 1) triples[i].ambiguous = true;
  }

  UnionFind uf(total);
  std::vector<char> in_triple(total, 0);
  for (const auto& tr : triples) {
    for (int v = 0; v < 3; ++v) in_triple[key(v, tr.s[v].track)] = 1;
    uf.unite(key(0, tr.s[0].track), key(1, tr.s[1].track));
    uf.unite(key(0, tr.s[0].track), key(2, tr.s[2].track));
  }

  // Leftover tracks are grouped by pairwise agreement for loss accounting.
  for (const auto& [f, views] : by_frame)
    for (int x = 0; x < 3; ++x)
      for (int y = x + 1; y < 3; ++y)
        for (const auto& sx : views[x])
          for (const auto& sy : views[y]) {
            const int kx = key(x, sx.track), ky = key(y, sy.track);
            if (in_triple[kx] || in_triple[ky]) continue;
            if (in_sync(*sx.obj, *sy.obj) && agree(*sx.obj, *sy.obj, flow, config))
              uf.unite(kx, ky);
          }

  std::map<int, std::vector<int>> groups;  // root (smallest key) -> members
  for (int k = 0; k < total; ++k) groups[uf.find(k)].push_back(k);
  std::map<int, std::vector<const Triple*>> group_triples;
  for (const auto& tr : triples) group_triples[uf.find(key(0, tr.s[0].track))].push_back(&tr);

  MatchResult result;
  auto lose = [&](const std::vector<int>& members, LossReason reason) {
    for (int k : members) {
      const int v = view_of(k);
      result.losses.push_back({static_cast<View>(v), k - base[v], reason, result.lost_particles});
    }
    ++result.lost_particles;
  };

  for (const auto& [root, members] : groups) {
    const auto gt = group_triples.find(root);
    if (gt == group_triples.end()) {
      // Seen by all three views but cut by the border whenever they agreed is
      // a border-only transit; otherwise no consistent view triple exists.
      std::array<bool, 3> seen{false, false, false};
      bool border = false;
      for (int k : members) {
        const int v = view_of(k);
        seen[v] = true;
        for (const auto& o : tracks[v][k - base[v]].objects) border |= o.touches_border;
      }
      const bool all = seen[0] && seen[1] && seen[2];
      lose(members, all && border ? LossReason::BorderOnly : LossReason::MissingView);
      continue;
    }
    bool ambiguous = false;
    for (const Triple* tr : gt->second) ambiguous |= tr->ambiguous;
    // Two tracks of one view alive at the same time cannot be one particle.
    for (std::size_t i = 0; i < members.size() && !ambiguous; ++i)
      for (std::size_t j = i + 1; j < members.size() && !ambiguous; ++j) {
        const int vi = view_of(members[i]), vj = view_of(members[j]);
        if (vi != vj) continue;
        const Track& ti = tracks[vi][members[i] - base[vi]];
        const Track& tj = tracks[vj][members[j] - base[vj]];
        ambiguous = ti.objects.front().frame_index <= tj.objects.back().frame_index &&
                    tj.objects.front().frame_index <= ti.objects.back().frame_index;
      }
    if (ambiguous) {
      lose(members, LossReason::Ambiguous);
      continue;
    }
    const Triple* best = nullptr;
    std::size_t best_area = 0;
    for (const Triple* tr : gt->second) {
      std::size_t area = 0;
      for (const auto& s : tr->s) area += s.obj->area;
      if (!best || area > best_area || (area == best_area && tr->frame < best->frame)) {
        best = tr;
        best_area = area;
      }
    }
    MatchedParticle mp{assemble_triprojection(*best->s[0].obj, *best->s[1].obj, *best->s[2].obj),
                       best->frame, {}};
    for (int k : members) mp.track_ids[view_of(k)].push_back(k - base[view_of(k)]);
    result.particles.push_back(std::move(mp));
  }

  std::stable_sort(result.particles.begin(), result.particles.end(),
                   [](const MatchedParticle& x, const MatchedParticle& y) {
                     const auto kx = std::make_tuple(x.frame_index, x.projection.origin.x(),
                                                     x.projection.origin.y(),
                                                     x.projection.origin.z());
                     const auto ky = std::make_tuple(y.frame_index, y.projection.origin.x(),
                                                     y.projection.origin.y(),
                                                     y.projection.origin.z());
                     return kx < ky;
                   });
  return result;
}

// ---------------------------------------------------------------------------
// Pipeline

StreamResult process_stream(const std::array<std::size_t, 3>& counts, const FrameLoader& loader,
                            const StreamConfig& config, int threads) {
  const std::size_t jobs = counts[0] + counts[1] + counts[2];
  std::vector<std::vector<DetectedObject>> dets(jobs);
  std::vector<std::vector<std::string>> warn(jobs);
  std::vector<int> index(jobs);
  auto locate = [&](std::size_t job) {
    int v = 0;
    while (job >= counts[v]) job -= counts[v++];
    return std::pair{static_cast<View>(v), job};
  };
  parallel_for(jobs, threads, [&](std::size_t job) {
    const auto [view, i] = locate(job);
    const Frame frame = loader(view, i);
    if (frame.view != view) throw Error(ErrorKind::DimensionMismatch, "loader returned wrong view");
    index[job] = frame.index;
    dets[job] = detect(frame, config.detection, &warn[job]);
  });

  StreamResult out;
  std::size_t job = 0;
  for (int v = 0; v < 3; ++v) {
    std::vector<std::vector<DetectedObject>> seq;
    int prev = std::numeric_limits<int>::min();
    for (std::size_t i = 0; i < counts[v]; ++i, ++job) {
      if (index[job] <= prev) {
        throw Error(ErrorKind::OrderViolation, "view " + std::string(to_string(View(v))) +
                                                   ": frame indices must strictly increase");
      }
      prev = index[job];
      for (auto& w : warn[job]) out.warnings.push_back(std::move(w));
      seq.push_back(std::move(dets[job]));
    }
    out.tracks[v] = track_objects(seq, static_cast<View>(v), config.flow_axis, config.tracking);
  }
  out.match = match_views(out.tracks, config.flow_axis, config.matching);
  return out;
}

StreamResult process_stream(const std::array<std::vector<Frame>, 3>& frames,
                            const StreamConfig& config, int threads) {
  return process_stream({frames[0].size(), frames[1].size(), frames[2].size()},
                        [&](View v, std::size_t i) { return frames[static_cast<int>(v)][i]; },
                        config, threads);
}

std::vector<FrameFile> list_frames(const std::filesystem::path& dir, View view) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::IoFailure, "not a directory: " + dir.string());
  }
  const std::string prefix = std::string(to_string(view)) + "_";
  std::vector<FrameFile> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() != prefix.size() + 10 || name.compare(0, prefix.size(), prefix) != 0) continue;
    const std::string digits = name.substr(prefix.size(), 6);
    const std::string ext = name.substr(prefix.size() + 6);
    if (ext != ".pgm" && ext != ".png") continue;
    if (!std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
      continue;
    out.push_back({std::stoi(digits), entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const FrameFile& a, const FrameFile& b) {
    return std::tie(a.index, a.path) < std::tie(b.index, b.path);
  });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].index == out[i - 1].index) {
      throw Error(ErrorKind::OrderViolation,
                  "duplicate frame index " + std::to_string(out[i].index) + " in " + dir.string());
    }
  }
  return out;
}

}  // namespace ocular
