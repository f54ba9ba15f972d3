#include "dipasm/gap_closer.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/strings/str_format.h>

#include <algorithm>
#include <map>
#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace dipasm {

namespace {

std::string oriented(const std::string& s, bool rev) { return rev ? reverse_complement(s) : s; }

struct Footprint {
  std::uint32_t scaffold;
  std::int64_t start;  // on the scaffold forward strand
  bool reversed;
  std::uint16_t library;
};

struct GapSpan {
  std::int64_t lo, hi;
  std::size_t task;
};

}  // namespace

std::vector<GapTask> project_reads(const std::vector<ScaffoldLayout>& layouts, const std::vector<std::string>& base,
                                   std::span<const ReadAlignment> alns, std::span<const std::uint16_t> library_of,
                                   const std::vector<Library>& libraries, std::span<const QualSeq> reads,
                                   const ProjectOptions& opts) {
  if (library_of.size() != alns.size()) throw std::invalid_argument("library assignment size mismatch");
  std::vector<GapTask> tasks;
  std::vector<std::vector<GapSpan>> spans(layouts.size());
  for (std::uint32_t s = 0; s < layouts.size(); ++s) {
    const auto& lay = layouts[s];
    for (std::uint32_t g = 0; g < lay.gaps.size(); ++g) {
      const Placed& l = lay.pieces[g];
      const Placed& r = lay.pieces[g + 1];
      GapTask t;
      t.scaffold = s;
      t.gap = g;
      std::string ls = oriented(base.at(l.object), l.reversed), rs = oriented(base.at(r.object), r.reversed);
      t.left_flank = ls.substr(ls.size() - std::min(ls.size(), opts.flank_keep));
      t.right_flank = rs.substr(0, opts.flank_keep);
      t.estimate = static_cast<double>(lay.gaps[g].size);
      t.sd = lay.gaps[g].sd;
      t.scaffold_depth = lay.depth();
      std::int64_t gs = l.start + l.length, ge = r.start;
      std::int64_t lo = std::min(gs, ge), hi = std::max(gs, ge);
      if (hi == lo) ++hi;
      spans[s].push_back({lo, hi, tasks.size()});
      tasks.push_back(std::move(t));
    }
  }

  auto pm = placement_map(layouts);
  std::vector<std::optional<Footprint>> fp(reads.size());
  for (std::size_t i = 0; i < alns.size(); ++i) {
    const auto& a = alns[i];
    if (a.read_index >= reads.size() || fp[a.read_index]) continue;
    auto p = project_alignment(a, pm);
    std::int64_t start = p.reversed ? p.sstart - (a.read_len - a.rend) : p.sstart - a.rstart;
    fp[a.read_index] = Footprint{p.seq, start, p.reversed, library_of[i]};
  }

  auto assign = [&](std::uint32_t scaffold, std::int64_t lo, std::int64_t hi, std::uint32_t read, bool rev) {
    for (const auto& gsp : spans[scaffold]) {
      if (gsp.hi <= lo || gsp.lo >= hi) continue;
      GapTask& t = tasks[gsp.task];
      if (!t.read_ids.empty() && t.read_ids.back() == read) continue;
      t.reads.push_back(rev ? reads[read].reverse_complement() : reads[read]);
      t.read_ids.push_back(read);
    }
  };

  absl::flat_hash_map<std::string, std::array<std::int64_t, 2>> mates;
  for (std::size_t i = 0; i < reads.size(); ++i) {
    if (reads[i].pair_slot == 1 || reads[i].pair_slot == 2) {
      auto [it, fresh] = mates.try_emplace(reads[i].id, std::array<std::int64_t, 2>{-1, -1});
      it->second[reads[i].pair_slot - 1] = static_cast<std::int64_t>(i);
    }
  }

  for (std::uint32_t i = 0; i < reads.size(); ++i) {
    const auto L = static_cast<std::int64_t>(reads[i].bases.size());
    if (fp[i]) {
      assign(fp[i]->scaffold, fp[i]->start, fp[i]->start + L, i, fp[i]->reversed);
      continue;
    }
    if (reads[i].pair_slot != 1 && reads[i].pair_slot != 2) continue;
    std::int64_t m = mates.at(reads[i].id)[2 - reads[i].pair_slot];
    if (m < 0 || !fp[m]) continue;
    const Footprint& f = *fp[m];
    const Library& lib = libraries.at(f.library);
    const double w = opts.window_sd * lib.insert_sd;
    const auto ML = static_cast<std::int64_t>(reads[m].bases.size());
    bool toward_right = lib.innie ? !f.reversed : f.reversed;
    std::int64_t lo, hi;
    if (toward_right) {
      lo = f.start + std::llround(lib.insert_mean - w) - L;
      hi = f.start + std::llround(lib.insert_mean + w);
    } else {
      std::int64_t y = f.start + ML;
      lo = y - std::llround(lib.insert_mean + w);
      hi = y - std::llround(lib.insert_mean - w) + L;
    }
    assign(f.scaffold, lo, hi, i, !f.reversed);
  }
  return tasks;
}

const char* close_method_name(CloseMethod m) {
  switch (m) {
    case CloseMethod::None: return "none";
    case CloseMethod::Splint: return "splint";
    case CloseMethod::RightWalk: return "right-walk";
    case CloseMethod::LeftWalk: return "left-walk";
    case CloseMethod::Patch: return "patch";
  }
  return "?";
}

std::optional<Closure> close_by_splint(const GapTask& task, int k, bool polymorphic) {
  const auto K = static_cast<std::size_t>(k);
  if (task.left_flank.size() < K || task.right_flank.size() < K) return std::nullopt;
  const std::string la = task.left_flank.substr(task.left_flank.size() - K);
  const std::string ra = task.right_flank.substr(0, K);
  std::map<std::pair<std::int64_t, std::string>, std::uint32_t> votes;
  std::uint32_t total = 0;
  for (const auto& r : task.reads) {
    auto a = r.bases.find(la);
    if (a == std::string::npos) continue;
    auto b = r.bases.find(ra, a + 1);
    if (b == std::string::npos) continue;
    auto size = static_cast<std::int64_t>(b) - static_cast<std::int64_t>(a + K);
    std::string bridge = size > 0 ? r.bases.substr(a + K, static_cast<std::size_t>(size)) : std::string();
    ++votes[{size, bridge}];
    ++total;
  }
  if (total < 2) return std::nullopt;
  const std::pair<std::int64_t, std::string>* pick = nullptr;
  if (!polymorphic) {
    if (votes.size() != 1) return std::nullopt;
    pick = &votes.begin()->first;
  } else {
    std::uint32_t top = 0;
    for (const auto& [key, n] : votes) top = std::max(top, n);
    for (const auto& [key, n] : votes) {
      if (n != top) continue;
      if (pick) return std::nullopt;
      pick = &key;
    }
  }
  Closure c;
  c.scaffold = task.scaffold;
  c.gap = task.gap;
  c.method = CloseMethod::Splint;
  c.size = pick->first;
  c.seq = pick->second;
  return c;
}

int quality_bin(std::uint8_t q) {
  if (q <= 10) return 0;
  if (q <= 20) return 1;
  if (q <= 30) return 2;
  return 3;
}

int accept_extension(const std::array<std::array<std::uint32_t, 4>, 4>& tally, bool polymorphic, bool& fork) {
  fork = false;
  std::array<bool, 4> occupied{};
  for (int b = 0; b < 4; ++b)
    for (int j = 0; j < 4; ++j) occupied[j] = occupied[j] || tally[b][j] > 0;
  int top[2] = {-1, -1};
  for (int j = 3, n = 0; j >= 0 && n < 2; --j)
    if (occupied[j]) top[n++] = j;
  if (top[0] < 0) return -1;
  std::vector<int> cand;
  for (int b = 0; b < 4; ++b) {
    bool in_top = tally[b][top[0]] > 0 || (top[1] >= 0 && tally[b][top[1]] > 0);
    if (in_top) cand.push_back(b);
  }
  auto total = [&](int b) { return tally[b][0] + tally[b][1] + tally[b][2] + tally[b][3]; };
  int pick = -1;
  if (cand.size() == 1) {
    pick = cand[0];
  } else if (polymorphic) {
    std::uint32_t best = 0;
    int n_best = 0;
    for (int b : cand) {
      if (total(b) > best) {
        best = total(b);
        pick = b;
        n_best = 1;
      } else if (total(b) == best) {
        ++n_best;
      }
    }
    if (n_best != 1) pick = -1;
  }
  if (pick < 0) {
    fork = true;
    return -1;
  }
  const auto& t = tally[pick];
  if (t[2] + t[3] >= 2 || t[1] + t[2] + t[3] >= 3) return pick;
  return -1;
}

namespace {

using Tally = std::array<std::array<std::uint32_t, 4>, 4>;
using TallyMap = absl::flat_hash_map<std::string, Tally>;

TallyMap build_tallies(const std::vector<QualSeq>& reads, int k) {
  TallyMap m;
  const auto K = static_cast<std::size_t>(k);
  for (const auto& r : reads) {
    for (std::size_t i = 0; i + K < r.bases.size(); ++i) {
      int b = base_code(r.bases[i + K]);
      if (b < 0) continue;
      std::string_view key(r.bases.data() + i, K);
      if (key.find('N') != std::string_view::npos) continue;
      m[std::string(key)][b][quality_bin(r.quals[i + K])]++;
    }
  }
  return m;
}

}  // namespace

Walk mer_walk(const GapTask& task, Direction dir, const WalkOptions& opts) {
  std::vector<QualSeq> reads;
  std::string context, target;
  const auto K = static_cast<std::size_t>(opts.k);
  if (dir == Direction::Right) {
    reads = task.reads;
    context = task.left_flank;
    target = task.right_flank.substr(0, K);
  } else {
    for (const auto& r : task.reads) reads.push_back(r.reverse_complement());
    context = reverse_complement(task.right_flank);
    target = reverse_complement(task.left_flank.substr(task.left_flank.size() - std::min(K, task.left_flank.size())));
  }
  int ceiling = opts.k_ceiling;
  if (ceiling <= 0) {
    std::size_t longest = 0;
    for (const auto& r : reads) longest = std::max(longest, r.bases.size());
    ceiling = static_cast<int>(longest) - 1;
  }
  std::size_t max_len = opts.max_length;
  if (max_len == 0) max_len = static_cast<std::size_t>(std::max(0.0, task.estimate + 3 * task.sd)) + K + 1;

  Walk w;
  int k = opts.k;
  absl::flat_hash_map<int, TallyMap> tables;
  std::string ctx = context;
  const std::size_t base_len = context.size();
  while (!target.empty()) {
    if (ctx.size() < static_cast<std::size_t>(k) || ctx.size() - base_len >= max_len) break;
    auto tab = tables.find(k);
    if (tab == tables.end()) tab = tables.emplace(k, build_tallies(reads, k)).first;
    auto it = tab->second.find(ctx.substr(ctx.size() - static_cast<std::size_t>(k)));
    bool fork = false;
    int b = it == tab->second.end() ? -1 : accept_extension(it->second, opts.polymorphic, fork);
    if (b >= 0) {
      ctx.push_back(kBases[b]);
      if (ctx.size() - base_len >= 1 && ctx.size() >= target.size() &&
          ctx.compare(ctx.size() - target.size(), target.size(), target) == 0) {
        w.reached = true;
        break;
      }
      continue;
    }
    // Fork: lengthen the word; dead end: shorten it.
    int next = fork ? k + 2 : k - 2;
    if (w.shifts >= opts.max_shifts || next < opts.k_floor || next > ceiling) break;
    k = next;
    ++w.shifts;
  }
  w.final_k = k;
  w.seq = ctx.substr(base_len);
  if (dir == Direction::Left) w.seq = reverse_complement(w.seq);
  return w;
}

std::optional<std::string> patch_walks(const std::string& right_walk, const std::string& left_walk,
                                       std::size_t min_overlap) {
  const std::size_t n = std::min(right_walk.size(), left_walk.size());
  for (std::size_t o = n; o >= min_overlap && o > 0; --o) {
    if (right_walk.compare(right_walk.size() - o, o, left_walk, 0, o) == 0) return right_walk + left_walk.substr(o);
  }
  return std::nullopt;
}

Closure close_gap(const GapTask& task, const GapCloseOptions& opts) {
  Closure c;
  c.scaffold = task.scaffold;
  c.gap = task.gap;
  c.estimate = task.estimate;
  c.sd = task.sd;
  if (opts.d_max > 0 && task.scaffold_depth >= opts.repeat_copy_count * opts.d_max) {
    c.status = "skipped-repeat";
    return c;
  }
  auto found = [&]() -> bool {
    if (auto s = close_by_splint(task, opts.k, opts.polymorphic)) {
      c.method = CloseMethod::Splint;
      c.seq = s->seq;
      c.size = s->size;
      return true;
    }
    WalkOptions wo{.k = opts.k, .k_floor = opts.k_floor, .max_shifts = opts.max_shifts, .polymorphic = opts.polymorphic};
    if (opts.aggressive) {
      std::size_t longest = 0;
      for (const auto& r : task.reads) longest = std::max(longest, r.bases.size());
      wo.max_length = static_cast<std::size_t>(std::max(0.0, task.estimate + 6 * task.sd)) + 2 * longest +
                      static_cast<std::size_t>(opts.k);
    }
    const auto K = static_cast<std::int64_t>(opts.k);
    Walk right = mer_walk(task, Direction::Right, wo);
    if (right.reached) {
      c.method = CloseMethod::RightWalk;
      c.size = static_cast<std::int64_t>(right.seq.size()) - K;
      if (c.size > 0) c.seq = right.seq.substr(0, static_cast<std::size_t>(c.size));
      return true;
    }
    Walk left = mer_walk(task, Direction::Left, wo);
    if (left.reached) {
      c.method = CloseMethod::LeftWalk;
      c.size = static_cast<std::int64_t>(left.seq.size()) - K;
      if (c.size > 0) c.seq = left.seq.substr(static_cast<std::size_t>(K));
      return true;
    }
    if (!right.seq.empty() && !left.seq.empty()) {
      if (auto p = patch_walks(right.seq, left.seq, opts.min_overlap)) {
        c.method = CloseMethod::Patch;
        c.seq = *p;
        c.size = static_cast<std::int64_t>(p->size());
        return true;
      }
    }
    return false;
  }();
  if (!found) {
    c.status = "unclosed";
    return c;
  }
  if (opts.aggressive || std::abs(static_cast<double>(c.size) - task.estimate) <= 3 * task.sd) {
    c.accepted = true;
    c.status = "closed";
  } else {
    c.status = "rejected-size";
  }
  return c;
}

std::vector<Closure> close_gaps(std::span<const GapTask> tasks, const GapCloseOptions& opts, unsigned threads) {
  std::vector<Closure> out(tasks.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, tasks.size()))));
  auto work = [&](unsigned t) {
    for (std::size_t i = t; i < tasks.size(); i += threads) out[i] = close_gap(tasks[i], opts);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  return out;
}

std::vector<FastaRecord> render_scaffolds(const std::vector<ScaffoldLayout>& layouts, const std::vector<std::string>& base,
                                          std::span<const Closure> closures, const EmitOptions& opts) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, const Closure*> by_gap;
  for (const auto& c : closures) {
    if (!c.accepted) continue;
    if (!opts.aggressive && std::abs(static_cast<double>(c.size) - c.estimate) > 3 * c.sd)
      throw std::logic_error("accepted closure outside the size window");
    by_gap[{c.scaffold, c.gap}] = &c;
  }
  std::vector<FastaRecord> out;
  for (std::uint32_t s = 0; s < layouts.size(); ++s) {
    const auto& lay = layouts[s];
    FastaRecord rec{"scaffold_" + std::to_string(s + 1), {}};
    std::string& seq = rec.seq;
    if (!lay.pieces.empty()) seq = oriented(base.at(lay.pieces[0].object), lay.pieces[0].reversed);
    for (std::uint32_t g = 0; g < lay.gaps.size(); ++g) {
      std::string next = oriented(base.at(lay.pieces[g + 1].object), lay.pieces[g + 1].reversed);
      auto it = by_gap.find({s, g});
      if (it != by_gap.end()) {
        const Closure& c = *it->second;
        if (c.size >= 0) {
          seq += c.seq;
          seq += next;
        } else {
          seq += next.substr(std::min<std::size_t>(next.size(), static_cast<std::size_t>(-c.size)));
        }
        continue;
      }
      std::int64_t est = lay.gaps[g].size;
      if (est >= opts.min_gap_ns) {
        seq.append(static_cast<std::size_t>(est), 'N');
        seq += next;
        continue;
      }
      // Trim both flanks so exactly min_gap_ns Ns stand in for the gap.
      std::int64_t trim = opts.min_gap_ns - est;
      std::int64_t lt = std::min<std::int64_t>(trim / 2, static_cast<std::int64_t>(seq.size()) - 1);
      std::int64_t rt = std::min<std::int64_t>(trim - trim / 2, static_cast<std::int64_t>(next.size()) - 1);
      seq.resize(seq.size() - static_cast<std::size_t>(std::max<std::int64_t>(0, lt)));
      seq.append(static_cast<std::size_t>(opts.min_gap_ns), 'N');
      seq += next.substr(static_cast<std::size_t>(std::max<std::int64_t>(0, rt)));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_closure_report(std::ostream& out, std::span<const Closure> closures) {
  out << "#gap\tmethod\testimate\tsd\tclosed_size\tstatus\n";
  for (const auto& c : closures) {
    out << absl::StrFormat("scaffold_%d.gap_%d\t%s\t%.1f\t%.1f\t%s\t%s\n", c.scaffold + 1, c.gap,
                           close_method_name(c.method), c.estimate, c.sd, c.method == CloseMethod::None ? "-" : std::to_string(c.size), c.status);
  }
}

}  // namespace dipasm
