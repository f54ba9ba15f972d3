#include "dipasm/bubbletig.hpp"

#include <absl/container/flat_hash_map.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace dipasm {

namespace {

std::string oriented_seq(const UUContig& c, bool reversed) { return reversed ? reverse_complement(c.seq) : c.seq; }

// Outward extension of an oriented anchor word is unique in the table.
bool extends_uniquely(const UfxTable& table, const Kmer& word, bool right) {
  bool flipped = false;
  const UfxRecord* rec = table.find(word.canonical(&flipped));
  if (!rec) return false;
  bool use_right = right != flipped;
  return (use_right ? rec->code.right : rec->code.left) == EndCode::U;
}

}  // namespace

std::optional<std::pair<Kmer, Kmer>> contig_anchors(const UUContig& c, int k, bool reversed) {
  if (!c.left_ext || !c.right_ext || static_cast<int>(c.seq.size()) < k - 1) return std::nullopt;
  std::string s = oriented_seq(c, reversed);
  char lb = reversed ? complement(*c.right_ext) : *c.left_ext;
  char rb = reversed ? complement(*c.left_ext) : *c.right_ext;
  Kmer la = Kmer::from_string(lb + s.substr(0, k - 1));
  Kmer ra = Kmer::from_string(s.substr(s.size() - (k - 1)) + rb);
  return std::make_pair(la, ra);
}

std::vector<Bubble> detect_bubbles(const std::vector<UUContig>& contigs, const UfxTable& table) {
  const int k = table.k();
  struct Member {
    std::uint32_t contig;
    bool reversed;
  };
  // Key: the anchor pair in whichever reading direction is smaller.
  std::map<std::pair<Kmer, Kmer>, std::vector<Member>> groups;
  for (const auto& c : contigs) {
    if (c.cyclic) continue;
    auto fwd = contig_anchors(c, k, false);
    if (!fwd) continue;
    auto rev = contig_anchors(c, k, true);
    if (*fwd == *rev) continue;  // palindromic; no consistent direction
    bool use_rev = *rev < *fwd;
    groups[use_rev ? *rev : *fwd].push_back({c.id, use_rev});
  }

  std::vector<Bubble> out;
  for (const auto& [anchors, members] : groups) {
    if (members.size() != 2) continue;
    if (!extends_uniquely(table, anchors.first, false) || !extends_uniquely(table, anchors.second, true)) continue;
    Bubble b;
    const auto& m0 = members[0].contig < members[1].contig ? members[0] : members[1];
    const auto& m1 = members[0].contig < members[1].contig ? members[1] : members[0];
    b.branch_a = m0.contig;
    b.branch_b = m1.contig;
    b.a_reversed = m0.reversed;
    b.b_reversed = m1.reversed;
    b.left_anchor = anchors.first;
    b.right_anchor = anchors.second;
    const auto& ca = contigs[b.branch_a];
    const auto& cb = contigs[b.branch_b];
    b.depth_a = ca.mean_depth;
    b.depth_b = cb.mean_depth;
    b.len_a = ca.seq.size();
    b.len_b = cb.seq.size();
    out.push_back(b);
  }
  std::sort(out.begin(), out.end(),
            [](const Bubble& x, const Bubble& y) { return std::tie(x.branch_a, x.branch_b) < std::tie(y.branch_a, y.branch_b); });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<std::uint32_t>(i);
  return out;
}

namespace {

struct Piece {
  ChainElement::Kind kind;
  std::uint32_t id;
  Kmer left, right;  // forward-direction anchors
};

struct BubbleBranches {
  std::string major, minor;  // read in the bubble's direction
};

BubbleBranches bubble_branches(const Bubble& b, const std::vector<UUContig>& contigs) {
  std::string a = oriented_seq(contigs[b.branch_a], b.a_reversed);
  std::string c = oriented_seq(contigs[b.branch_b], b.b_reversed);
  // Ties go to the smaller canonical sequence so the choice is strand-free.
  bool a_major = b.depth_a > b.depth_b || (b.depth_a == b.depth_b && contigs[b.branch_a].seq < contigs[b.branch_b].seq);
  return a_major ? BubbleBranches{a, c} : BubbleBranches{c, a};
}

std::string core(const std::string& branch, int k) {
  const std::size_t flank = static_cast<std::size_t>(k - 1);
  if (branch.size() <= 2 * flank) return {};
  return branch.substr(flank, branch.size() - 2 * flank);
}

}  // namespace

ChainResult chain_diplotigs(const std::vector<UUContig>& contigs, const std::vector<Bubble>& bubbles, int k) {
  std::vector<bool> is_branch(contigs.size(), false);
  for (const auto& b : bubbles) is_branch[b.branch_a] = is_branch[b.branch_b] = true;

  std::vector<Piece> pieces;
  for (const auto& c : contigs) {
    if (is_branch[c.id] || c.cyclic) continue;
    auto anchors = contig_anchors(c, k, false);
    if (!anchors) continue;
    pieces.push_back({ChainElement::Kind::Contig, c.id, anchors->first, anchors->second});
  }
  for (const auto& b : bubbles) pieces.push_back({ChainElement::Kind::Bubble, b.id, b.left_anchor, b.right_anchor});

  // Oriented node n = 2*piece + reversed.
  auto left_of = [&](std::size_t n) {
    const Piece& p = pieces[n / 2];
    return n % 2 ? p.right.reverse_complement() : p.left;
  };
  auto right_of = [&](std::size_t n) {
    const Piece& p = pieces[n / 2];
    return n % 2 ? p.left.reverse_complement() : p.right;
  };
  absl::flat_hash_map<Kmer, std::vector<std::size_t>> by_left;
  for (std::size_t n = 0; n < 2 * pieces.size(); ++n) by_left[left_of(n)].push_back(n);

  auto unique_left = [&](const Kmer& anchor) -> std::optional<std::size_t> {
    auto it = by_left.find(anchor);
    if (it == by_left.end() || it->second.size() != 1) return std::nullopt;
    return it->second[0];
  };
  // Successor of n: the only node whose left anchor is n's right anchor, with n
  // the only node whose right anchor it is, and alternating kinds.
  auto next_of = [&](std::size_t n) -> std::optional<std::size_t> {
    Kmer r = right_of(n);
    auto m = unique_left(r);
    if (!m || *m / 2 == n / 2) return std::nullopt;
    auto back = unique_left(r.reverse_complement());
    if (!back || *back != (n ^ 1)) return std::nullopt;
    if (pieces[*m / 2].kind == pieces[n / 2].kind) return std::nullopt;
    return m;
  };
  auto prev_of = [&](std::size_t n) -> std::optional<std::size_t> {
    auto p = next_of(n ^ 1);
    if (!p) return std::nullopt;
    return *p ^ 1;
  };

  std::vector<bool> used(pieces.size(), false);
  std::vector<std::vector<std::size_t>> chains;
  auto walk = [&](std::size_t start) {
    std::vector<std::size_t> chain{start};
    used[start / 2] = true;
    std::size_t cur = start;
    while (auto nx = next_of(cur)) {
      if (used[*nx / 2]) break;
      used[*nx / 2] = true;
      chain.push_back(*nx);
      cur = *nx;
    }
    chains.push_back(std::move(chain));
  };
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    if (used[p]) continue;
    std::size_t n = 2 * p;
    if (!prev_of(n)) {
      walk(n);
    } else if (!next_of(n)) {
      walk(n ^ 1);
    }
  }
  // Whatever remains lies on cycles; open each at its lowest piece.
  for (std::size_t p = 0; p < pieces.size(); ++p)
    if (!used[p]) walk(2 * p);

  ChainResult result;
  std::vector<bool> contig_used(contigs.size(), false);
  for (const auto& chain : chains) {
    bool has_bubble = false;
    for (auto n : chain) has_bubble |= pieces[n / 2].kind == ChainElement::Kind::Bubble;
    if (!has_bubble) continue;

    auto build = [&](const std::vector<ChainElement>& elems) {
      Diplotig d;
      d.chain = elems;
      double weighted = 0, bases = 0;
      for (const auto& e : elems) {
        std::string piece;
        std::optional<AltAllele> alt;
        if (e.kind == ChainElement::Kind::Contig) {
          const auto& c = contigs[e.id];
          piece = oriented_seq(c, e.reversed);
          weighted += c.mean_depth * static_cast<double>(c.seq.size());
          bases += static_cast<double>(c.seq.size());
        } else {
          const Bubble& b = bubbles[e.id];
          auto br = bubble_branches(b, contigs);
          if (e.reversed) {
            br.major = reverse_complement(br.major);
            br.minor = reverse_complement(br.minor);
          }
          piece = br.major;
          alt = AltAllele{b.id, 0, core(br.major, k), core(br.minor, k)};
          weighted += b.depth_a * static_cast<double>(b.len_a) + b.depth_b * static_cast<double>(b.len_b);
          bases += static_cast<double>(b.len_a + b.len_b);
        }
        std::size_t start = 0;
        if (d.consensus.empty()) {
          d.consensus = piece;
        } else {
          const std::size_t ov = static_cast<std::size_t>(k - 2);
          if (d.consensus.compare(d.consensus.size() - ov, ov, piece, 0, ov) != 0)
            throw std::logic_error("chained pieces do not overlap by k-2 bases");
          start = d.consensus.size() - ov;
          d.consensus.append(piece, ov, std::string::npos);
        }
        if (alt) {
          alt->offset = start + static_cast<std::size_t>(k - 1);
          d.alts.push_back(*alt);
        }
      }
      d.mean_depth = bases > 0 ? weighted / bases : 0;
      return d;
    };

    std::vector<ChainElement> elems;
    for (auto n : chain) elems.push_back({pieces[n / 2].kind, pieces[n / 2].id, n % 2 == 1});
    Diplotig d = build(elems);
    if (reverse_complement(d.consensus) < d.consensus) {
      std::vector<ChainElement> rev(elems.rbegin(), elems.rend());
      for (auto& e : rev) e.reversed = !e.reversed;
      d = build(rev);
    }
    for (const auto& e : d.chain) {
      if (e.kind == ChainElement::Kind::Contig) {
        contig_used[e.id] = true;
      } else {
        contig_used[bubbles[e.id].branch_a] = contig_used[bubbles[e.id].branch_b] = true;
      }
    }
    result.diplotigs.push_back(std::move(d));
  }
  std::sort(result.diplotigs.begin(), result.diplotigs.end(),
            [](const Diplotig& a, const Diplotig& b) { return a.consensus < b.consensus; });
  for (std::size_t i = 0; i < result.diplotigs.size(); ++i) result.diplotigs[i].id = static_cast<std::uint32_t>(i);
  for (const auto& c : contigs)
    if (!contig_used[c.id]) result.leftovers.push_back(c.id);
  return result;
}

std::vector<Isotig> select_isotigs(const std::vector<UUContig>& contigs, const std::vector<std::uint32_t>& leftovers,
                                   int k, double d_max, const IsotigOptions& opts) {
  std::vector<Isotig> out;
  const double min_len = opts.min_length_factor * k;
  for (auto id : leftovers) {
    const auto& c = contigs[id];
    if (static_cast<double>(c.seq.size()) < min_len) continue;
    if (c.mean_depth < opts.depth_lo * d_max || c.mean_depth > opts.depth_hi * d_max) continue;
    out.push_back({id, c.mean_depth});
  }
  return out;
}

BubbleStats bubble_stats(const std::vector<Bubble>& bubbles, double d_max, double bin_width) {
  BubbleStats s;
  s.bin_width = bin_width;
  for (const auto& b : bubbles) {
    ++s.len_diff_hist[b.len_diff()];
    ++s.branch_len_hist[b.len_a];
    ++s.branch_len_hist[b.len_b];
    int lo = static_cast<int>(std::floor(std::min(b.depth_a, b.depth_b) / bin_width));
    int hi = static_cast<int>(std::floor(std::max(b.depth_a, b.depth_b) / bin_width));
    ++s.depth_heatmap[{lo, hi}];
    auto half = [&](double d) { return d >= 0.25 * d_max && d <= 0.75 * d_max; };
    if (half(b.depth_a) && half(b.depth_b)) {
      ++s.half_depth;
    } else {
      ++s.other_depth;
    }
  }
  return s;
}

void write_alt_alleles(std::ostream& out, const std::vector<Diplotig>& diplotigs) {
  for (const auto& d : diplotigs) {
    for (const auto& a : d.alts) {
      out << "diplotig_" << d.id << '\t' << a.offset << '\t' << (a.consensus.empty() ? "-" : a.consensus) << '\t'
          << (a.alternate.empty() ? "-" : a.alternate) << '\n';
    }
  }
}

void write_bubble_stats(std::ostream& out, const BubbleStats& s) {
  out << "bubbles_half_depth=" << s.half_depth << "\nbubbles_other_depth=" << s.other_depth << '\n';
  out << "# len_diff\tbubbles\n";
  for (const auto& [d, n] : s.len_diff_hist) out << d << '\t' << n << '\n';
  out << "# branch_length\tbranches\n";
  for (const auto& [l, n] : s.branch_len_hist) out << l << '\t' << n << '\n';
  out << "# depth_lo_bin\tdepth_hi_bin\tbubbles (bin width " << s.bin_width << ")\n";
  for (const auto& [bins, n] : s.depth_heatmap) out << bins.first << '\t' << bins.second << '\t' << n << '\n';
}

}  // namespace dipasm
