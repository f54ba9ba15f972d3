#include "dipasm/scaffolder.hpp"

#include <absl/strings/str_format.h>
#include <absl/strings/str_split.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace dipasm {

namespace {

std::uint64_t edge_key(EndId a, EndId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

struct Accum {
  std::vector<SpanObs> spans;
  std::vector<SplintObs> splints;
};

using AccumMap = absl::flat_hash_map<std::uint64_t, Accum>;

// Alignment as seen by the library's read orientation.
struct Mate {
  const ReadAlignment* aln;
  bool reversed;
  int rstart;  // of the 5' end after reorientation
};

Mate orient(const ReadAlignment& a, const Library& lib) {
  if (lib.innie) return {&a, a.reversed, a.rstart};
  return {&a, !a.reversed, a.read_len - a.rend};
}

void add_splints(const std::vector<const ReadAlignment*>& read, const std::vector<ObjectInfo>& objects, AccumMap& acc) {
  for (std::size_t i = 1; i < read.size(); ++i) {
    const ReadAlignment& a = *read[i - 1];
    const ReadAlignment& b = *read[i];
    if (a.seq == b.seq) continue;
    const std::int64_t la = objects[a.seq].length, lb = objects[b.seq].length;
    EndId ea = a.reversed ? head_of(a.seq) : tail_of(a.seq);
    EndId eb = b.reversed ? tail_of(b.seq) : head_of(b.seq);
    std::int64_t exit_a = a.reversed ? a.sstart : la - a.send;
    std::int64_t entry_b = b.reversed ? lb - b.send : b.sstart;
    auto gap = static_cast<std::int32_t>(b.rstart - a.rend - exit_a - entry_b);
    acc[edge_key(ea, eb)].splints.push_back({a.read_index, gap, a.rend, b.rstart});
  }
}

}  // namespace

std::vector<LinkEdge> build_links(std::span<const ReadAlignment> alns, std::span<const std::uint16_t> library_of,
                                  const std::vector<ObjectInfo>& objects, const std::vector<Library>& libraries,
                                  const LinkOptions& opts) {
  if (library_of.size() != alns.size()) throw std::invalid_argument("library assignment size mismatch");
  // Group by read name; mates share it.
  absl::flat_hash_map<std::string_view, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < alns.size(); ++i) {
    auto [it, fresh] = group_of.try_emplace(alns[i].read_id, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }

  auto process = [&](std::size_t lo, std::size_t hi, AccumMap& acc) {
    for (std::size_t g = lo; g < hi; ++g) {
      std::vector<const ReadAlignment*> by_slot[3];
      std::uint16_t lib_index = library_of[groups[g].front()];
      for (auto i : groups[g]) by_slot[std::min<int>(alns[i].pair_slot, 2)].push_back(&alns[i]);
      for (auto& r : by_slot) {
        std::sort(r.begin(), r.end(), [](auto* x, auto* y) { return x->rstart < y->rstart; });
        add_splints(r, objects, acc);
      }
      if (by_slot[1].empty() || by_slot[2].empty()) continue;
      const Library& lib = libraries.at(lib_index);
      Mate m1 = orient(*by_slot[1].front(), lib), m2 = orient(*by_slot[2].front(), lib);
      if (m1.aln->seq == m2.aln->seq) continue;
      auto tail_of_mate = [&](const Mate& m, EndId& end) {
        const ReadAlignment& a = *m.aln;
        if (!m.reversed) {
          end = tail_of(a.seq);
          return objects[a.seq].length - (a.sstart - m.rstart);
        }
        end = head_of(a.seq);
        return static_cast<std::int64_t>(a.send) + m.rstart;
      };
      EndId e1, e2;
      std::int64_t t = tail_of_mate(m1, e1) + tail_of_mate(m2, e2);
      if (static_cast<double>(t) > lib.insert_mean + 3 * lib.insert_sd) continue;
      acc[edge_key(e1, e2)].spans.push_back({lib_index, static_cast<std::int32_t>(t)});
    }
  };

  unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(groups.size() / 64 + 1)));
  std::vector<AccumMap> parts(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t)
      pool.emplace_back(process, groups.size() * t / threads, groups.size() * (t + 1) / threads, std::ref(parts[t]));
    process(0, groups.size() / threads, parts[0]);
  }
  for (unsigned t = 1; t < threads; ++t) {
    for (auto& [key, a] : parts[t]) {
      auto& dst = parts[0][key];
      dst.spans.insert(dst.spans.end(), a.spans.begin(), a.spans.end());
      dst.splints.insert(dst.splints.end(), a.splints.begin(), a.splints.end());
    }
  }

  std::vector<std::uint64_t> keys;
  for (const auto& [key, a] : parts[0]) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  std::vector<LinkEdge> edges;
  for (auto key : keys) {
    Accum& a = parts[0][key];
    LinkEdge e;
    e.end_a = static_cast<EndId>(key >> 32);
    e.end_b = static_cast<EndId>(key & 0xffffffffu);
    e.support = static_cast<std::uint32_t>(a.spans.size() + a.splints.size());
    if (e.support < std::max<std::uint32_t>(1, opts.min_support)) continue;
    std::sort(a.spans.begin(), a.spans.end());
    std::sort(a.splints.begin(), a.splints.end());
    e.spans = std::move(a.spans);
    e.splints = std::move(a.splints);
    e.kind = e.splints.empty() ? LinkEdge::Kind::Span : LinkEdge::Kind::Splint;
    auto est = estimate_gap_size(e, libraries, objects, opts.min_anchor);
    e.gap_estimate = est.gap;
    e.gap_sd = est.sd;
    edges.push_back(std::move(e));
  }
  return edges;
}

double expected_spanning_insert(double gap, double mean, double sd, std::int64_t len_a, std::int64_t len_b,
                                int min_anchor) {
  if (sd <= 0) return mean;
  const double step = std::max(1.0, sd / 50);
  const double m = min_anchor;
  double wsum = 0, isum = 0;
  for (double x = mean - 6 * sd; x <= mean + 6 * sd; x += step) {
    // Number of ways to place the tails: t_a in [m, len_a], x - gap - t_a in [m, len_b].
    double lo = std::max(m, x - gap - static_cast<double>(len_b));
    double hi = std::min(static_cast<double>(len_a), x - gap - m);
    double ways = hi - lo + 1;
    if (ways <= 0) continue;
    double z = (x - mean) / sd;
    double w = std::exp(-0.5 * z * z) * ways;
    wsum += w;
    isum += w * x;
  }
  return wsum > 0 ? isum / wsum : mean;
}

double corrected_span_gap(double mean_tails, double mean, double sd, std::int64_t len_a, std::int64_t len_b,
                          int min_anchor) {
  if (sd <= 0) return mean - mean_tails;
  // Expected tail sum falls as the gap grows; bisect for the observed one.
  auto tails_at = [&](double g) { return expected_spanning_insert(g, mean, sd, len_a, len_b, min_anchor) - g; };
  double lo = -static_cast<double>(std::min(len_a, len_b)), hi = mean + 6 * sd;
  if (tails_at(lo) <= mean_tails) return lo;
  if (tails_at(hi) >= mean_tails) return hi;
  for (int it = 0; it < 60 && hi - lo > 1e-3; ++it) {
    double mid = 0.5 * (lo + hi);
    (tails_at(mid) > mean_tails ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

GapEstimate estimate_gap_size(const LinkEdge& edge, const std::vector<Library>& libraries,
                              const std::vector<ObjectInfo>& objects, int min_anchor) {
  if (!edge.splints.empty()) {
    std::vector<std::int32_t> g;
    for (const auto& s : edge.splints) g.push_back(s.gap);
    std::sort(g.begin(), g.end());
    double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    double var = 0;
    for (auto x : g) var += (x - mean) * (x - mean);
    var /= static_cast<double>(g.size());
    return {static_cast<double>(g[(g.size() - 1) / 2]), std::max(1.0, std::sqrt(var))};
  }
  if (edge.spans.empty()) return {0, 0};
  const std::int64_t la = objects[seq_of(edge.end_a)].length, lb = objects[seq_of(edge.end_b)].length;
  std::map<std::uint16_t, std::pair<double, std::size_t>> per_lib;
  for (const auto& s : edge.spans) {
    auto& [sum, n] = per_lib[s.library];
    sum += s.tails;
    ++n;
  }
  double wsum = 0, gsum = 0;
  for (const auto& [lib, sn] : per_lib) {
    const Library& L = libraries.at(lib);
    double n = static_cast<double>(sn.second);
    double g = corrected_span_gap(sn.first / n, L.insert_mean, L.insert_sd, la, lb, min_anchor);
    double var = std::max(L.insert_sd * L.insert_sd, 1.0) / n;
    wsum += 1 / var;
    gsum += g / var;
  }
  return {gsum / wsum, std::sqrt(1 / wsum)};
}

Eligibility check_end_defects(const std::vector<LinkEdge>& edges, const std::vector<ObjectInfo>& objects,
                              const DefectOptions& opts) {
  const std::size_t n_ends = 2 * objects.size();
  Eligibility el;
  el.end_ok.assign(n_ends, true);
  el.edge_ok.assign(edges.size(), true);
  // Midway between one and `depth_factor` copies.
  const double depth_cut = (1 + opts.depth_factor) / 2;
  std::vector<std::vector<std::size_t>> at(n_ends);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    double da = objects[seq_of(e.end_a)].depth, db = objects[seq_of(e.end_b)].depth;
    if (da > 0 && db > 0 && std::max(da, db) / std::min(da, db) >= depth_cut) el.edge_ok[i] = false;
    if (seq_of(e.end_a) == seq_of(e.end_b)) {
      el.end_ok[e.end_a] = el.end_ok[e.end_b] = false;
      continue;
    }
    at[e.end_a].push_back(i);
    at[e.end_b].push_back(i);
  }
  for (EndId x = 0; x < n_ends; ++x) {
    if (at[x].empty() || !el.end_ok[x]) continue;
    std::vector<std::size_t> ok;
    absl::flat_hash_map<std::uint32_t, int> partner_ends;
    for (auto i : at[x]) {
      ++partner_ends[seq_of(edges[i].other(x))];
      if (el.edge_ok[i]) ok.push_back(i);
    }
    bool bad = ok.empty();
    for (const auto& [seq, n] : partner_ends) bad |= n > 1;
    // Two partners claiming overlapping stretches beyond the end.
    for (std::size_t p = 0; p < ok.size() && !bad; ++p) {
      for (std::size_t q = p + 1; q < ok.size() && !bad; ++q) {
        const auto& ep = edges[ok[p]];
        const auto& eq = edges[ok[q]];
        double p0 = ep.gap_estimate, p1 = p0 + static_cast<double>(objects[seq_of(ep.other(x))].length);
        double q0 = eq.gap_estimate, q1 = q0 + static_cast<double>(objects[seq_of(eq.other(x))].length);
        double overlap = std::min(p1, q1) - std::max(p0, q0);
        double tol = 3 * std::hypot(ep.gap_sd, eq.gap_sd) + opts.conflict_slack;
        bad = overlap > tol;
      }
    }
    if (bad) el.end_ok[x] = false;
  }
  return el;
}

double ScaffoldLayout::depth() const {
  double w = 0, s = 0;
  for (const auto& p : pieces) {
    w += static_cast<double>(p.length);
    s += p.depth * static_cast<double>(p.length);
  }
  return w > 0 ? s / w : 0;
}

void relayout(ScaffoldLayout& s) {
  std::int64_t pos = 0;
  for (std::size_t i = 0; i < s.pieces.size(); ++i) {
    s.pieces[i].start = pos;
    if (i < s.gaps.size()) pos += s.pieces[i].length + std::max(s.gaps[i].size, 1 - s.pieces[i].length);
  }
}

namespace {

// Closest partner by gap; near-ties (within 1 bp) go to higher support and
// otherwise leave the end unextended.
std::optional<std::size_t> closest(const std::vector<LinkEdge>& edges, const std::vector<std::size_t>& cand) {
  if (cand.empty()) return std::nullopt;
  double best_gap = edges[cand[0]].gap_estimate;
  for (auto i : cand) best_gap = std::min(best_gap, edges[i].gap_estimate);
  std::vector<std::size_t> near;
  for (auto i : cand)
    if (edges[i].gap_estimate <= best_gap + 1) near.push_back(i);
  std::uint32_t top = 0;
  for (auto i : near) top = std::max(top, edges[i].support);
  std::optional<std::size_t> pick;
  for (auto i : near) {
    if (edges[i].support != top) continue;
    if (pick) return std::nullopt;
    pick = i;
  }
  return pick;
}

}  // namespace

std::vector<ScaffoldLayout> traverse(const std::vector<LinkEdge>& edges, const Eligibility& elig,
                                     const std::vector<ObjectInfo>& objects, const TraverseOptions& opts) {
  const std::size_t n = objects.size(), n_ends = 2 * n;
  std::vector<std::vector<std::size_t>> usable(n_ends);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (!elig.edge_ok[i] || seq_of(e.end_a) == seq_of(e.end_b)) continue;
    if (!elig.end_ok[e.end_a] || !elig.end_ok[e.end_b]) continue;
    usable[e.end_a].push_back(i);
    usable[e.end_b].push_back(i);
  }
  auto is_long = [&](std::uint32_t s) { return static_cast<double>(objects[s].length) > opts.long_length; };
  auto extendable = [&](EndId x, EndId y) {
    for (auto i : usable[opposite(y)])
      if (seq_of(edges[i].other(opposite(y))) != seq_of(x)) return true;
    return false;
  };

  std::vector<std::optional<std::size_t>> best(n_ends);
  for (EndId x = 0; x < n_ends; ++x) {
    const auto& cand = usable[x];
    if (cand.empty()) continue;
    if (is_long(seq_of(x))) {
      std::vector<std::size_t> longs;
      for (auto i : cand)
        if (is_long(seq_of(edges[i].other(x)))) longs.push_back(i);
      if (!longs.empty()) {
        best[x] = closest(edges, longs);
        continue;
      }
    }
    std::vector<std::size_t> ext;
    for (auto i : cand)
      if (extendable(x, edges[i].other(x))) ext.push_back(i);
    best[x] = closest(edges, ext.empty() ? cand : ext);
  }

  // Mutual choices become joins.
  std::vector<std::optional<std::size_t>> joined(n_ends);
  for (EndId x = 0; x < n_ends; ++x) {
    if (!best[x]) continue;
    EndId y = edges[*best[x]].other(x);
    if (best[y] == best[x]) joined[x] = best[x];
  }

  std::vector<bool> placed(n, false);
  std::vector<ScaffoldLayout> out;
  auto walk = [&](std::uint32_t start, bool rev, bool stop_at_start) {
    ScaffoldLayout s;
    std::uint32_t cur = start;
    bool cur_rev = rev;
    while (true) {
      placed[cur] = true;
      s.pieces.push_back({cur, cur_rev, 0, objects[cur].length, objects[cur].depth});
      EndId leave = cur_rev ? head_of(cur) : tail_of(cur);
      if (!joined[leave]) break;
      const auto& e = edges[*joined[leave]];
      EndId enter = e.other(leave);
      std::uint32_t next = seq_of(enter);
      if (placed[next] || (stop_at_start && next == start)) break;
      s.gaps.push_back({std::llround(e.gap_estimate), e.gap_sd});
      cur = next;
      cur_rev = is_tail(enter);
    }
    return s;
  };
  for (std::uint32_t s = 0; s < n; ++s) {
    if (placed[s]) continue;
    if (!joined[head_of(s)]) out.push_back(walk(s, false, false));
    else if (!joined[tail_of(s)]) out.push_back(walk(s, true, false));
  }
  for (std::uint32_t s = 0; s < n; ++s)
    if (!placed[s]) out.push_back(walk(s, false, true));  // cycles, opened at their lowest member

  // Suspend leftover singletons between adjacent pieces they link to uniquely.
  std::vector<std::size_t> layout_of(n), index_in(n);
  for (std::size_t l = 0; l < out.size(); ++l)
    for (std::size_t i = 0; i < out[l].pieces.size(); ++i) {
      layout_of[out[l].pieces[i].object] = l;
      index_in[out[l].pieces[i].object] = i;
    }
  struct Suspended {
    double gap_left, sd_left;
    double gap_right, sd_right;
    std::uint32_t obj;
    bool rev;
  };
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Suspended>> inserts;  // (layout, gap index)
  std::vector<bool> suspended(n, false);
  std::vector<std::vector<std::size_t>> ok_at(n_ends);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (!elig.edge_ok[i] || seq_of(e.end_a) == seq_of(e.end_b)) continue;
    ok_at[e.end_a].push_back(i);
    ok_at[e.end_b].push_back(i);
  }
  for (std::size_t l = 0; l < out.size(); ++l) {
    if (out[l].pieces.size() != 1) continue;
    std::uint32_t s = out[l].pieces[0].object;
    if (ok_at[head_of(s)].size() != 1 || ok_at[tail_of(s)].size() != 1) continue;
    const auto& eh = edges[ok_at[head_of(s)][0]];
    const auto& et = edges[ok_at[tail_of(s)][0]];
    EndId xh = eh.other(head_of(s)), xt = et.other(tail_of(s));
    std::uint32_t ph = seq_of(xh), pt = seq_of(xt);
    if (ph == pt || layout_of[ph] != layout_of[pt] || out[layout_of[ph]].pieces.size() < 2) continue;
    std::size_t lay = layout_of[ph];
    std::size_t ih = index_in[ph], it = index_in[pt];
    if (std::max(ih, it) - std::min(ih, it) != 1) continue;
    // The partner ends must face each other across that gap.
    std::size_t left = std::min(ih, it);
    const Placed& lp = out[lay].pieces[left];
    const Placed& rp = out[lay].pieces[left + 1];
    EndId left_leave = lp.reversed ? head_of(lp.object) : tail_of(lp.object);
    EndId right_enter = rp.reversed ? tail_of(rp.object) : head_of(rp.object);
    bool head_left = xh == left_leave && xt == right_enter;
    bool tail_left = xt == left_leave && xh == right_enter;
    if (!head_left && !tail_left) continue;
    const auto& el = head_left ? eh : et;
    const auto& er = head_left ? et : eh;
    inserts[{lay, left}].push_back({el.gap_estimate, el.gap_sd, er.gap_estimate, er.gap_sd, s, tail_left});
    suspended[s] = true;
  }
  for (auto it = inserts.rbegin(); it != inserts.rend(); ++it) {
    auto [lay, gi] = it->first;
    auto& list = it->second;
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      return std::tie(a.gap_left, a.obj) < std::tie(b.gap_left, b.obj);
    });
    ScaffoldLayout& s = out[lay];
    std::vector<Placed> pieces;
    std::vector<GapEntry> gaps;
    double cursor_gap = list[0].gap_left, cursor_sd = list[0].sd_left;
    double prev_end = 0;  // relative to the left piece's end
    bool first = true;
    for (const auto& x : list) {
      if (!first) {
        double g = x.gap_left - prev_end;
        if (g < -static_cast<double>(objects[pieces.back().object].length)) {
          suspended[x.obj] = false;
          continue;
        }
        cursor_gap = g;
        cursor_sd = x.sd_left;
      }
      gaps.push_back({std::llround(cursor_gap), cursor_sd});
      pieces.push_back({x.obj, x.rev, 0, objects[x.obj].length, objects[x.obj].depth});
      prev_end = x.gap_left + static_cast<double>(objects[x.obj].length);
      first = false;
    }
    const auto& last = *std::find_if(list.rbegin(), list.rend(), [&](const auto& x) { return suspended[x.obj]; });
    gaps.push_back({std::llround(last.gap_right), last.sd_right});
    s.gaps.erase(s.gaps.begin() + static_cast<std::ptrdiff_t>(gi));
    s.gaps.insert(s.gaps.begin() + static_cast<std::ptrdiff_t>(gi), gaps.begin(), gaps.end());
    s.pieces.insert(s.pieces.begin() + static_cast<std::ptrdiff_t>(gi) + 1, pieces.begin(), pieces.end());
  }
  std::vector<ScaffoldLayout> result;
  for (auto& s : out) {
    if (s.pieces.size() == 1 && suspended[s.pieces[0].object]) continue;
    relayout(s);
    result.push_back(std::move(s));
  }
  auto min_obj = [](const ScaffoldLayout& s) {
    std::uint32_t m = UINT32_MAX;
    for (const auto& p : s.pieces) m = std::min(m, p.object);
    return m;
  };
  std::stable_sort(result.begin(), result.end(), [&](const auto& a, const auto& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    return min_obj(a) < min_obj(b);
  });
  return result;
}

N50Stats compute_n50(std::vector<std::int64_t> lengths, std::int64_t min_length) {
  std::erase_if(lengths, [&](std::int64_t x) { return x < min_length; });
  N50Stats st;
  if (lengths.empty()) return st;
  std::sort(lengths.rbegin(), lengths.rend());
  for (auto x : lengths) st.total += x;
  std::int64_t run = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    run += lengths[i];
    if (2 * run >= st.total) {
      st.n50 = lengths[i];
      st.l50 = i + 1;
      break;
    }
  }
  return st;
}

SweepResult sweep_min_support(const std::vector<LinkEdge>& edges, const std::vector<ObjectInfo>& objects,
                              const TraverseOptions& topts, const DefectOptions& dopts,
                              std::vector<std::uint32_t> thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("no link thresholds to sweep");
  std::sort(thresholds.rbegin(), thresholds.rend());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  SweepResult best;
  bool have = false;
  for (auto t : thresholds) {
    std::vector<LinkEdge> kept;
    for (const auto& e : edges)
      if (e.support >= t) kept.push_back(e);
    auto el = check_end_defects(kept, objects, dopts);
    auto layouts = traverse(kept, el, objects, topts);
    std::vector<std::int64_t> lens;
    for (const auto& s : layouts) lens.push_back(s.length());
    auto st = compute_n50(lens);
    best.tried.emplace_back(t, st.n50);
    // Descending order: a later threshold must strictly improve to win.
    if (!have || st.n50 > best.n50.n50) {
      best.threshold = t;
      best.layouts = std::move(layouts);
      best.n50 = st;
      have = true;
    }
  }
  return best;
}

std::vector<ScaffoldLayout> flatten(const std::vector<ScaffoldLayout>& upper, const std::vector<ScaffoldLayout>& lower) {
  std::vector<ScaffoldLayout> out;
  out.reserve(upper.size());
  for (const auto& u : upper) {
    ScaffoldLayout s;
    for (std::size_t i = 0; i < u.pieces.size(); ++i) {
      if (i > 0) s.gaps.push_back(u.gaps[i - 1]);
      const ScaffoldLayout& l = lower.at(u.pieces[i].object);
      if (!u.pieces[i].reversed) {
        for (std::size_t j = 0; j < l.pieces.size(); ++j) {
          if (j > 0) s.gaps.push_back(l.gaps[j - 1]);
          s.pieces.push_back(l.pieces[j]);
        }
      } else {
        for (std::size_t j = l.pieces.size(); j-- > 0;) {
          if (j + 1 < l.pieces.size()) s.gaps.push_back(l.gaps[j]);
          Placed p = l.pieces[j];
          p.reversed = !p.reversed;
          s.pieces.push_back(p);
        }
      }
    }
    relayout(s);
    out.push_back(std::move(s));
  }
  return out;
}

PlacementMap placement_map(const std::vector<ScaffoldLayout>& layouts) {
  PlacementMap m;
  for (std::size_t i = 0; i < layouts.size(); ++i)
    for (const auto& p : layouts[i].pieces)
      m[p.object] = {static_cast<std::uint32_t>(i), p.start, p.reversed, p.length};
  return m;
}

std::vector<ScaffoldLayout> trivial_layouts(const std::vector<ObjectInfo>& base) {
  std::vector<ScaffoldLayout> out(base.size());
  for (std::uint32_t i = 0; i < base.size(); ++i) out[i].pieces.push_back({i, false, 0, base[i].length, base[i].depth});
  return out;
}

ScaffoldResult scaffold_tiers(const std::vector<ObjectInfo>& base, std::span<const ReadAlignment> alns,
                              std::span<const std::uint16_t> library_of, const std::vector<Library>& libraries,
                              const ScaffoldOptions& opts) {
  std::map<int, std::vector<std::size_t>> by_tier;
  for (std::size_t i = 0; i < libraries.size(); ++i) by_tier[libraries[i].tier].push_back(i);
  std::vector<std::vector<std::size_t>> tiers;
  for (auto& [t, libs] : by_tier) tiers.push_back(libs);
  auto tier_insert = [&](const std::vector<std::size_t>& libs) {
    double m = 0;
    for (auto l : libs) m = std::max(m, libraries[l].insert_mean);
    return m;
  };
  std::stable_sort(tiers.begin(), tiers.end(),
                   [&](const auto& a, const auto& b) { return tier_insert(a) < tier_insert(b); });

  ScaffoldResult res;
  res.layouts = trivial_layouts(base);
  for (const auto& libs : tiers) {
    std::vector<bool> in_tier(libraries.size(), false);
    for (auto l : libs) in_tier[l] = true;
    auto placements = placement_map(res.layouts);
    std::vector<ReadAlignment> proj;
    std::vector<std::uint16_t> proj_lib;
    for (std::size_t i = 0; i < alns.size(); ++i) {
      if (!in_tier.at(library_of[i])) continue;
      proj.push_back(project_alignment(alns[i], placements));
      proj_lib.push_back(library_of[i]);
    }
    std::vector<ObjectInfo> objects;
    for (const auto& s : res.layouts) objects.push_back({s.length(), s.depth()});
    auto edges = build_links(proj, proj_lib, objects, libraries, {1, opts.min_anchor, opts.threads});
    auto sweep = sweep_min_support(edges, objects, {tier_insert(libs) / 2}, opts.defects, opts.thresholds);
    TierRun run;
    run.libraries = libs;
    run.threshold = sweep.threshold;
    run.edges = edges.size();
    for (const auto& s : sweep.layouts) run.joins += s.gaps.size();
    run.n50 = sweep.n50;
    res.layouts = flatten(sweep.layouts, res.layouts);
    res.tiers.push_back(std::move(run));
  }
  return res;
}

void write_srf(std::ostream& out, const std::vector<ScaffoldLayout>& layouts, const std::vector<std::string>& names) {
  out << "#scaffold\tindex\ttype\tid\tstrand\tstart\tlength\tdepth_or_sd\n";
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    const auto& s = layouts[i];
    std::string sid = "scaffold_" + std::to_string(i + 1);
    std::size_t idx = 0;
    for (std::size_t j = 0; j < s.pieces.size(); ++j) {
      const auto& p = s.pieces[j];
      if (j > 0) {
        const auto& g = s.gaps[j - 1];
        const auto& q = s.pieces[j - 1];
        out << absl::StrFormat("%s\t%d\tGAP\t-\t-\t%d\t%d\t%.3f\n", sid, idx++, q.start + q.length, g.size, g.sd);
      }
      out << absl::StrFormat("%s\t%d\tCONTIG\t%s\t%c\t%d\t%d\t%.3f\n", sid, idx++, names.at(p.object),
                             p.reversed ? '-' : '+', p.start, p.length, p.depth);
    }
  }
}

std::vector<ScaffoldLayout> read_srf(std::istream& in, const absl::flat_hash_map<std::string, std::uint32_t>& ids) {
  std::vector<ScaffoldLayout> out;
  std::string line, current;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f = absl::StrSplit(line, '\t');
    if (f.size() != 8) throw std::runtime_error("malformed srf line: " + line);
    if (out.empty() || f[0] != current) {
      out.emplace_back();
      current = f[0];
    }
    auto& s = out.back();
    if (f[2] == "CONTIG") {
      auto it = ids.find(f[3]);
      if (it == ids.end()) throw std::runtime_error("unknown sequence in srf: " + f[3]);
      s.pieces.push_back({it->second, f[4] == "-", std::stoll(f[5]), std::stoll(f[6]), std::stod(f[7])});
    } else if (f[2] == "GAP") {
      s.gaps.push_back({std::stoll(f[6]), std::stod(f[7])});
    } else {
      throw std::runtime_error("unknown srf entry type: " + f[2]);
    }
  }
  for (const auto& s : out)
    if (s.gaps.size() + 1 != s.pieces.size()) throw std::runtime_error("srf scaffold does not alternate pieces and gaps");
  return out;
}

}  // namespace dipasm
