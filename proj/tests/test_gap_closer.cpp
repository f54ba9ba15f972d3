#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "dipasm/gap_closer.hpp"
#include "dipasm/simkit.hpp"

using namespace dipasm;

namespace {

std::string random_seq(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::string s(n, 'A');
  for (auto& c : s) c = kBases[rng() % 4];
  return s;
}

QualSeq qs(std::string bases, std::uint8_t q = 35) {
  QualSeq r;
  r.id = "r";
  r.quals.assign(bases.size(), q);
  r.bases = std::move(bases);
  return r;
}

// Reads tiling `chr` every `step` bases, already on the scaffold strand.
std::vector<QualSeq> tile(const std::string& chr, std::size_t len, std::size_t step) {
  std::vector<QualSeq> out;
  for (std::size_t p = 0; p + len <= chr.size(); p += step) out.push_back(qs(chr.substr(p, len)));
  return out;
}

GapTask task_from(const std::string& chr, std::size_t gap_lo, std::size_t gap_hi, double sd = 10) {
  GapTask t;
  t.left_flank = chr.substr(0, gap_lo);
  t.right_flank = chr.substr(gap_hi);
  t.estimate = static_cast<double>(gap_hi) - static_cast<double>(gap_lo);
  t.sd = sd;
  return t;
}

ReadAlignment aln(std::string id, std::uint8_t slot, std::uint32_t index, int rstart, int rend, std::uint32_t seq,
                  int sstart, int send, bool rev, int read_len = 100) {
  ReadAlignment a;
  a.read_id = std::move(id);
  a.pair_slot = slot;
  a.read_index = index;
  a.rstart = rstart;
  a.rend = rend;
  a.seq = seq;
  a.sstart = sstart;
  a.send = send;
  a.reversed = rev;
  a.read_len = read_len;
  return a;
}

// Largest o >= min with suffix(a, o) == prefix(b, o).
std::optional<std::string> patch_oracle(const std::string& a, const std::string& b, std::size_t min) {
  std::optional<std::string> best;
  for (std::size_t o = min; o <= std::min(a.size(), b.size()); ++o)
    if (a.substr(a.size() - o) == b.substr(0, o)) best = a + b.substr(o);
  return best;
}

}  // namespace

TEST(Walk, QualityBinsAndAcceptance) {
  EXPECT_EQ(quality_bin(0), 0);
  EXPECT_EQ(quality_bin(10), 0);
  EXPECT_EQ(quality_bin(11), 1);
  EXPECT_EQ(quality_bin(20), 1);
  EXPECT_EQ(quality_bin(21), 2);
  EXPECT_EQ(quality_bin(30), 2);
  EXPECT_EQ(quality_bin(31), 3);

  std::array<std::array<std::uint32_t, 4>, 4> t{};
  bool fork = false;
  EXPECT_EQ(accept_extension(t, false, fork), -1);
  EXPECT_FALSE(fork);
  t[2][3] = 2;  // two high-quality G
  EXPECT_EQ(accept_extension(t, false, fork), 2);
  t[0][0] = 1;  // a low-quality A only shows in the top two bins when few bins are occupied
  EXPECT_EQ(accept_extension(t, false, fork), -1);
  EXPECT_TRUE(fork);
  t[2][2] = 1;  // now bins 3 and 2 are the top two
  EXPECT_EQ(accept_extension(t, false, fork), 2);
  EXPECT_FALSE(fork);

  std::array<std::array<std::uint32_t, 4>, 4> weak{};
  weak[1][3] = 1;
  EXPECT_EQ(accept_extension(weak, false, fork), -1);
  EXPECT_FALSE(fork);
  weak[1][1] = 2;  // 3 observations above Q10
  EXPECT_EQ(accept_extension(weak, false, fork), 1);

  std::array<std::array<std::uint32_t, 4>, 4> het{};
  het[0][3] = 5;
  het[3][3] = 3;
  EXPECT_EQ(accept_extension(het, false, fork), -1);
  EXPECT_TRUE(fork);
  EXPECT_EQ(accept_extension(het, true, fork), 0);
  het[3][3] = 5;
  EXPECT_EQ(accept_extension(het, true, fork), -1);
  EXPECT_TRUE(fork);
}

TEST(Project, FootprintsAndMateWindows) {
  std::vector<std::string> base{random_seq(1000, 1), random_seq(1000, 2)};
  ScaffoldLayout lay;
  lay.pieces = {{0, false, 0, 1000, 20}, {1, true, 1100, 1000, 20}};
  lay.gaps = {{100, 10}};
  std::vector<Library> libs{{"frag", 300, 30, true, 0}};
  std::vector<QualSeq> reads;
  auto add = [&](std::string id, std::uint8_t slot) {
    QualSeq r = qs(random_seq(100, reads.size() + 10));
    r.id = std::move(id);
    r.pair_slot = slot;
    reads.push_back(r);
  };
  add("near", 1);  // mate aligned 250 bp upstream of the gap, read unaligned
  add("near", 2);
  add("far", 1);   // mate too far upstream
  add("far", 2);
  add("hang", 1);  // aligned, overhanging into the gap
  add("rev", 1);   // aligned to the reversed right piece, hanging left into the gap
  std::vector<ReadAlignment> alns{aln("near", 1, 0, 0, 100, 0, 750, 850, false),
                                  aln("far", 1, 2, 0, 100, 0, 200, 300, false),
                                  aln("hang", 1, 4, 0, 60, 0, 940, 1000, false),
                                  aln("rev", 1, 5, 0, 50, 1, 950, 1000, false)};
  std::vector<std::uint16_t> lib_of(alns.size(), 0);
  auto tasks = project_reads({lay}, base, alns, lib_of, libs, reads);
  ASSERT_EQ(tasks.size(), 1u);
  const auto& t = tasks[0];
  EXPECT_EQ(t.left_flank, base[0]);
  EXPECT_EQ(t.right_flank, reverse_complement(base[1]));
  EXPECT_DOUBLE_EQ(t.estimate, 100);
  ASSERT_EQ(t.read_ids, (std::vector<std::uint32_t>{1, 4, 5}));
  EXPECT_EQ(t.reads[0].bases, reverse_complement(reads[1].bases));  // opposite strand to its mate
  EXPECT_EQ(t.reads[1].bases, reads[4].bases);
  EXPECT_EQ(t.reads[2].bases, reverse_complement(reads[5].bases));
}

TEST(Splint, AgreementRules) {
  std::string chr = random_seq(420, 3);
  GapTask t = task_from(chr, 200, 220);
  std::string span = chr.substr(160, 100);
  for (int i = 0; i < 3; ++i) t.reads.push_back(qs(span));
  auto c = close_by_splint(t, 31, false);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->size, 20);
  EXPECT_EQ(c->seq, chr.substr(200, 20));

  GapTask two = task_from(chr, 200, 220);
  two.reads.push_back(qs(span));
  std::string alt = span;
  alt.replace(40, 20, chr.substr(300, 17));  // 17 bp alternative
  two.reads.push_back(qs(alt));
  EXPECT_FALSE(close_by_splint(two, 31, false));
  EXPECT_FALSE(close_by_splint(two, 31, true));  // 1:1 has no winner

  GapTask one = task_from(chr, 200, 220);
  one.reads.push_back(qs(span));
  EXPECT_FALSE(close_by_splint(one, 31, true));

  GapTask poly = task_from(chr, 200, 220);
  for (int i = 0; i < 3; ++i) poly.reads.push_back(qs(span));
  poly.reads.push_back(qs(alt));
  EXPECT_FALSE(close_by_splint(poly, 31, false));
  auto p = close_by_splint(poly, 31, true);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->seq, chr.substr(200, 20));
}

TEST(Splint, NegativeGapMergesWithoutDuplication) {
  std::string chr = random_seq(600, 4);
  // Pieces [0,300) and [288,600): 12 bases shared.
  std::vector<std::string> base{chr.substr(0, 300), chr.substr(288)};
  GapTask t;
  t.left_flank = base[0];
  t.right_flank = base[1];
  t.estimate = -12;
  t.sd = 5;
  t.reads = {qs(chr.substr(240, 100)), qs(chr.substr(250, 100))};
  auto c = close_gap(t, {});
  EXPECT_EQ(c.method, CloseMethod::Splint);
  EXPECT_EQ(c.size, -12);
  EXPECT_TRUE(c.accepted);
  ScaffoldLayout lay;
  lay.pieces = {{0, false, 0, 300, 1}, {1, false, 288, 312, 1}};
  lay.gaps = {{-12, 5}};
  std::vector<Closure> cs{c};
  auto out = render_scaffolds({lay}, base, cs);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].name, "scaffold_1");
  EXPECT_EQ(out[0].seq, chr);
}

TEST(Walk, ErrorFreeGapClosedExactly) {
  std::string chr = random_seq(1000, 5);
  GapTask t = task_from(chr, 400, 480);
  t.reads = tile(chr, 100, 2);
  auto r = mer_walk(t, Direction::Right, {});
  ASSERT_TRUE(r.reached);
  EXPECT_EQ(r.seq, chr.substr(400, 80 + 31));
  auto l = mer_walk(t, Direction::Left, {});
  ASSERT_TRUE(l.reached);
  EXPECT_EQ(l.seq, chr.substr(400 - 31, 80 + 31));
  auto c = close_gap(t, {});
  EXPECT_EQ(c.method, CloseMethod::RightWalk);
  EXPECT_EQ(c.status, "closed");
  EXPECT_EQ(c.seq, chr.substr(400, 80));
}

TEST(Walk, ForkResolvedByLongerWord) {
  std::string chr = random_seq(1000, 6);
  // A 31-mer from the left flank recurs inside the gap with different neighbours.
  std::string x = chr.substr(300, 31);
  chr.replace(420, 31, x);
  chr[419] = chr[299] == 'A' ? 'C' : 'A';
  chr[451] = chr[331] == 'A' ? 'C' : 'A';
  GapTask t = task_from(chr, 400, 480);
  t.reads = tile(chr, 100, 1);
  auto r = mer_walk(t, Direction::Right, {});
  EXPECT_TRUE(r.reached);
  EXPECT_GE(r.shifts, 1);
  EXPECT_EQ(r.final_k, 33);
  EXPECT_EQ(r.seq.substr(0, 80), chr.substr(400, 80));

  auto stuck = mer_walk(t, Direction::Right, {.max_shifts = 0});
  EXPECT_FALSE(stuck.reached);
  EXPECT_EQ(stuck.seq, chr.substr(400, 51));
}

TEST(Walk, NoReadsNoBases) {
  std::string chr = random_seq(500, 7);
  GapTask t = task_from(chr, 200, 260);
  auto r = mer_walk(t, Direction::Right, {});
  EXPECT_FALSE(r.reached);
  EXPECT_TRUE(r.seq.empty());
  auto c = close_gap(t, {});
  EXPECT_EQ(c.method, CloseMethod::None);
  EXPECT_EQ(c.status, "unclosed");
  EXPECT_FALSE(c.accepted);
}

TEST(Patch, OverlapThresholdAndOracle) {
  std::string a = random_seq(40, 8), b = random_seq(40, 9), o15 = random_seq(15, 10);
  auto p = patch_walks(a + o15, o15 + b);
  ASSERT_TRUE(p);
  EXPECT_EQ(*p, a + o15 + b);
  std::string o9 = o15.substr(0, 9);
  EXPECT_EQ(patch_walks(a + o9, o9 + b), patch_oracle(a + o9, o9 + b, 10));
  EXPECT_FALSE(patch_walks(a + o9, o9 + b));
  std::string o12 = o15.substr(0, 12), o12m = o12;
  o12m[5] = o12m[5] == 'A' ? 'C' : 'A';
  EXPECT_FALSE(patch_walks(a + o12, o12m + b));

  std::mt19937_64 rng(11);
  for (int i = 0; i < 3000; ++i) {
    // Small alphabet slices make chance overlaps common.
    std::string x = random_seq(5 + rng() % 30, rng()), y = random_seq(5 + rng() % 30, rng());
    for (auto& c : x) c = "AC"[c % 2];
    for (auto& c : y) c = "AC"[c % 2];
    EXPECT_EQ(patch_walks(x, y), patch_oracle(x, y, 10)) << x << " " << y;
  }
}

TEST(Close, PatchWhenWalksMeetMidGap) {
  std::string chr = random_seq(1000, 12);
  GapTask t = task_from(chr, 400, 560, 10);
  // Two read islands sharing only 20 bases: each walk stalls, and they overlap by 20.
  for (std::size_t p = 300; p + 100 <= 500; ++p) t.reads.push_back(qs(chr.substr(p, 100)));
  for (std::size_t p = 480; p + 100 <= 660; ++p) t.reads.push_back(qs(chr.substr(p, 100)));
  auto c = close_gap(t, {});
  EXPECT_EQ(c.method, CloseMethod::Patch);
  EXPECT_EQ(c.seq, chr.substr(400, 160));
  EXPECT_TRUE(c.accepted);
}

TEST(Close, SizeWindowAndRepeatSkip) {
  std::string chr = random_seq(420, 13);
  GapTask t = task_from(chr, 200, 220);
  for (int i = 0; i < 3; ++i) t.reads.push_back(qs(chr.substr(160, 100)));
  t.estimate = 36;
  t.sd = 5;
  auto c = close_gap(t, {});
  EXPECT_EQ(c.status, "rejected-size");
  EXPECT_FALSE(c.accepted);
  t.estimate = 35;
  EXPECT_TRUE(close_gap(t, {}).accepted);
  t.estimate = 80;
  EXPECT_TRUE(close_gap(t, {.aggressive = true}).accepted);

  t.scaffold_depth = 24;
  EXPECT_EQ(close_gap(t, {.d_max = 10}).status, "skipped-repeat");
  t.scaffold_depth = 19;
  EXPECT_NE(close_gap(t, {.d_max = 10}).status, "skipped-repeat");
}

TEST(Render, ShortGapsTrimmedToMinimumNs) {
  std::vector<std::string> base{random_seq(100, 14), random_seq(100, 15)};
  ScaffoldLayout lay;
  lay.pieces = {{0, false, 0, 100, 1}, {1, false, 103, 100, 1}};
  lay.gaps = {{3, 2}};
  auto out = render_scaffolds({lay}, base, {});
  EXPECT_EQ(out[0].seq, base[0].substr(0, 97) + std::string(10, 'N') + base[1].substr(4));

  lay.gaps = {{25, 2}};
  out = render_scaffolds({lay}, base, {});
  EXPECT_EQ(out[0].seq, base[0] + std::string(25, 'N') + base[1]);

  Closure bad;
  bad.accepted = true;
  bad.size = 40;
  bad.estimate = 25;
  bad.sd = 2;
  std::vector<Closure> cs{bad};
  EXPECT_THROW(render_scaffolds({lay}, base, cs), std::logic_error);
  EXPECT_NO_THROW(render_scaffolds({lay}, base, cs, {.aggressive = true}));
}

TEST(Report, Format) {
  Closure c;
  c.scaffold = 0;
  c.gap = 2;
  c.method = CloseMethod::LeftWalk;
  c.size = 57;
  c.estimate = 60;
  c.sd = 4;
  c.status = "closed";
  Closure u;
  u.scaffold = 1;
  u.estimate = 12.25;
  u.status = "unclosed";
  std::ostringstream os;
  std::vector<Closure> cs{c, u};
  write_closure_report(os, cs);
  EXPECT_EQ(os.str(),
            "#gap\tmethod\testimate\tsd\tclosed_size\tstatus\n"
            "scaffold_1.gap_2\tleft-walk\t60.0\t4.0\t57\tclosed\n"
            "scaffold_2.gap_0\tnone\t12.2\t0.0\t-\tunclosed\n");
}

TEST(GapSimulation, AssignmentAndClosure) {
  const int k = 31;
  auto g = sim::generate_genome({.length = 30000, .seed = 21});
  const std::string& chr = g.chromosomes[0].seq;
  // Gap sizes cycle through a range, including one overlap.
  const std::vector<std::int64_t> gap_sizes{40, 80, -15, 120, 20, 150, 60, 5};
  std::vector<std::pair<std::int64_t, std::int64_t>> iv;
  std::int64_t p = 0;
  for (std::size_t i = 0; p < static_cast<std::int64_t>(chr.size()); ++i) {
    std::int64_t end = std::min<std::int64_t>(static_cast<std::int64_t>(chr.size()), p + 2500);
    iv.push_back({p, end});
    p = end + gap_sizes[i % gap_sizes.size()];
  }
  if (iv.back().second - iv.back().first < 200) iv.pop_back();
  std::vector<std::string> base;
  ScaffoldLayout lay;
  for (std::size_t i = 0; i < iv.size(); ++i) {
    std::string s = chr.substr(static_cast<std::size_t>(iv[i].first), static_cast<std::size_t>(iv[i].second - iv[i].first));
    bool rev = i % 3 == 1;
    base.push_back(rev ? reverse_complement(s) : s);
    lay.pieces.push_back({static_cast<std::uint32_t>(i), rev, iv[i].first, iv[i].second - iv[i].first, 30});
    if (i > 0) lay.gaps.push_back({iv[i].first - iv[i - 1].second, 10});
  }
  SeedIndex idx(base, k);
  std::vector<Library> libs{{"frag", 300, 30, true, 0}};
  auto rs = sim::simulate_reads({g.chromosomes}, {.coverage = 30, .error_rate = 0.005, .seed = 22});
  auto alns = align_reads(rs.reads, idx);
  std::vector<std::uint16_t> lib_of(alns.size(), 0);
  auto tasks = project_reads({lay}, base, alns, lib_of, libs, rs.reads);
  ASSERT_EQ(tasks.size(), lay.gaps.size());

  // Reads whose true footprint overlaps a gap land in that gap's task.
  std::size_t in_gap = 0, assigned = 0;
  for (std::size_t gi = 0; gi < tasks.size(); ++gi) {
    std::int64_t lo = std::min(iv[gi].second, iv[gi + 1].first), hi = std::max(iv[gi].second, iv[gi + 1].first);
    if (hi == lo) ++hi;
    std::set<std::uint32_t> ids(tasks[gi].read_ids.begin(), tasks[gi].read_ids.end());
    for (std::uint32_t r = 0; r < rs.origins.size(); ++r) {
      auto s = static_cast<std::int64_t>(rs.origins[r].pos);
      if (s + 100 <= lo || s >= hi) continue;
      ++in_gap;
      assigned += ids.count(r);
    }
  }
  ASSERT_GT(in_gap, 300u);
  EXPECT_GE(static_cast<double>(assigned) / static_cast<double>(in_gap), 0.95);

  auto closures = close_gaps(tasks, {.k = k}, 1);
  std::size_t closed = 0;
  for (std::size_t gi = 0; gi < closures.size(); ++gi) {
    const auto& c = closures[gi];
    if (!c.accepted) continue;
    ++closed;
    std::int64_t truth = iv[gi + 1].first - iv[gi].second;
    EXPECT_EQ(c.size, truth) << gi;
    if (truth > 0) {
      EXPECT_EQ(c.seq, chr.substr(static_cast<std::size_t>(iv[gi].second), static_cast<std::size_t>(truth))) << gi;
    }
  }
  EXPECT_GE(static_cast<double>(closed) / static_cast<double>(closures.size()), 0.9);
  if (closed == closures.size()) {
    auto out = render_scaffolds({lay}, base, closures);
    EXPECT_EQ(out[0].seq, chr.substr(0, static_cast<std::size_t>(iv.back().second)));
  }

  // Each gap depends only on its own task: thread count and task order do not matter.
  auto threaded = close_gaps(tasks, {.k = k}, 3);
  std::vector<GapTask> rev(tasks.rbegin(), tasks.rend());
  auto reordered = close_gaps(rev, {.k = k}, 2);
  for (std::size_t i = 0; i < closures.size(); ++i) {
    const auto& r = reordered[closures.size() - 1 - i];
    EXPECT_EQ(threaded[i].seq, closures[i].seq);
    EXPECT_EQ(threaded[i].status, closures[i].status);
    EXPECT_EQ(r.seq, closures[i].seq);
    EXPECT_EQ(r.method, closures[i].method);
  }
}
