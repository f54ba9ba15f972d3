#include "dipasm/evaluator.hpp"

#include <absl/strings/str_format.h>

#include <algorithm>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

namespace dipasm {

namespace {

char next_base(const std::string& seq, std::size_t pos, int m, bool same) {
  if (same) return pos + static_cast<std::size_t>(m) < seq.size() ? seq[pos + static_cast<std::size_t>(m)] : 0;
  return pos > 0 ? complement(seq[pos - 1]) : 0;
}

}  // namespace

MarkerTable extract_markers(const std::vector<FastaRecord>& hap_a, const std::vector<FastaRecord>& hap_b,
                            const MarkerOptions& opts) {
  if (opts.m <= 0 || opts.m % 2 == 0 || opts.m > Marker::kMaxK)
    throw std::invalid_argument("marker length must be odd and at most " + std::to_string(Marker::kMaxK));
  MarkerTable t;
  t.m = opts.m;
  t.seed = opts.seed;
  t.sample_frac = opts.sample_frac;
  std::vector<MarkerEntry> all;
  absl::flat_hash_map<Marker, std::uint32_t> idx;
  for (std::uint32_t c = 0; c < hap_a.size(); ++c) {
    const std::string& s = hap_a[c].seq;
    for_each_canonical<4>(s, opts.m, [&](const Marker& km, bool flipped, int pos) {
      auto [it, fresh] = idx.try_emplace(km, static_cast<std::uint32_t>(all.size()));
      if (fresh) {
        MarkerEntry e;
        e.kmer = km;
        e.chrom = c;
        e.pos = static_cast<std::uint32_t>(pos);
        e.flipped = flipped;
        e.next_a = next_base(s, static_cast<std::size_t>(pos), opts.m, true);
        all.push_back(e);
      }
      ++all[it->second].count_a;
    });
  }
  for (const auto& rec : hap_b) {
    const std::string& s = rec.seq;
    for_each_canonical<4>(s, opts.m, [&](const Marker& km, bool flipped, int pos) {
      auto it = idx.find(km);
      if (it == idx.end()) return;
      MarkerEntry& e = all[it->second];
      if (e.count_b++ == 0) e.next_b = next_base(s, static_cast<std::size_t>(pos), opts.m, flipped == e.flipped);
    });
  }
  idx.clear();
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& e : all) {
    if (e.count_b == 0) continue;
    if (e.single_copy()) e.sampled = u(rng) < opts.sample_frac;
    t.index.emplace(e.kmer, static_cast<std::uint32_t>(t.entries.size()));
    t.entries.push_back(e);
  }
  return t;
}

AssemblyHits locate_markers(const MarkerTable& markers, const std::vector<FastaRecord>& assembly) {
  AssemblyHits h;
  h.count.assign(markers.entries.size(), 0);
  h.first.resize(markers.entries.size());
  for (std::uint32_t s = 0; s < assembly.size(); ++s) {
    for_each_canonical<4>(assembly[s].seq, markers.m, [&](const Marker& km, bool flipped, int pos) {
      auto it = markers.index.find(km);
      if (it == markers.index.end()) return;
      if (h.count[it->second]++ == 0)
        h.first[it->second] = {s, static_cast<std::uint32_t>(pos), flipped == markers.entries[it->second].flipped};
    });
  }
  return h;
}

std::array<CompletenessRow, 4> completeness_by_copy(const MarkerTable& markers, const AssemblyHits& hits) {
  std::array<CompletenessRow, 4> rows;
  for (int i = 0; i < 4; ++i) rows[i].label = i == 3 ? "4+" : std::to_string(i + 1);
  for (std::size_t i = 0; i < markers.entries.size(); ++i) {
    const auto& e = markers.entries[i];
    if (!e.equal_frequency()) continue;
    auto& row = rows[std::min<std::uint32_t>(e.count_a, 4) - 1];
    ++row.total;
    std::uint32_t c = hits.count[i];
    if (c == 0) {
      ++row.absent;
    } else if (c < e.count_a) {
      ++row.fewer;
    } else if (c == e.count_a) {
      ++row.equal;
    } else {
      ++row.more;
    }
  }
  return rows;
}

FidelityRates base_fidelity(const MarkerTable& markers, const AssemblyHits& hits,
                            const std::vector<FastaRecord>& assembly) {
  FidelityRates f;
  for (std::size_t i = 0; i < markers.entries.size(); ++i) {
    const auto& e = markers.entries[i];
    if (!e.single_copy() || e.next_a == 0 || e.next_a != e.next_b || hits.count[i] == 0) continue;
    const auto& h = hits.first[i];
    char got = next_base(assembly[h.scaffold].seq, h.pos, markers.m, h.same_strand);
    if (got == 0) continue;  // marker ends the scaffold
    ++f.loci_assessed;
    if (base_code(got) < 0) {
      ++f.unspecified;
    } else if (got != e.next_a) {
      ++f.mismatches;
    }
  }
  if (f.loci_assessed > 0) {
    const double scale = 1e4 / static_cast<double>(f.loci_assessed);
    f.mu_M = static_cast<double>(f.mismatches) * scale;
    f.mu_U = static_cast<double>(f.unspecified) * scale;
    f.mu = static_cast<double>(f.mismatches + f.unspecified) * scale;
  }
  return f;
}

std::vector<MarkerPlacement> sampled_placements(const MarkerTable& markers, const AssemblyHits& hits) {
  std::vector<MarkerPlacement> out;
  std::uint64_t rank = 0;
  for (std::size_t i = 0; i < markers.entries.size(); ++i) {
    const auto& e = markers.entries[i];
    if (!e.sampled || hits.count[i] != 1) continue;
    const auto& h = hits.first[i];
    out.push_back({e.chrom, rank++, h.scaffold, h.pos, h.same_strand});
  }
  return out;
}

void chromosome_assignment(const std::vector<MarkerPlacement>& placed, const std::vector<std::int64_t>& scaffold_lengths,
                           int min_markers, ScaffoldAccuracy& out) {
  std::vector<std::map<std::uint32_t, int>> per(scaffold_lengths.size());
  for (const auto& p : placed) ++per.at(p.scaffold)[p.chrom];
  double total = 0, u = 0, m = 0, n = 0;
  for (std::size_t s = 0; s < per.size(); ++s) {
    auto len = static_cast<double>(scaffold_lengths[s]);
    total += len;
    int strong = 0;
    for (const auto& [chrom, c] : per[s]) strong += c >= min_markers;
    if (strong == 0) {
      n += len;
    } else if (strong == 1) {
      u += len;
    } else {
      m += len;
    }
  }
  if (total > 0) {
    out.f_U = u / total;
    out.f_M = m / total;
    out.f_N = n / total;
  }
}

void order_precision_recall(std::vector<MarkerPlacement> placed, ScaffoldAccuracy& out) {
  out.markers_used = placed.size();
  std::array<std::uint64_t, 3> ok{};
  std::uint64_t pairs = 0;

  // Precision: consecutive markers along each scaffold.
  std::sort(placed.begin(), placed.end(), [](const auto& a, const auto& b) {
    return std::tie(a.scaffold, a.pos) < std::tie(b.scaffold, b.pos);
  });
  for (std::size_t i = 0; i + 1 < placed.size(); ++i) {
    const auto& a = placed[i];
    const auto& b = placed[i + 1];
    if (a.scaffold != b.scaffold) continue;
    ++pairs;
    if (a.chrom != b.chrom) continue;
    ++ok[0];
    if (a.same_strand != b.same_strand) continue;
    ++ok[1];
    if (a.same_strand ? b.ref_rank == a.ref_rank + 1 : a.ref_rank == b.ref_rank + 1) ++ok[2];
  }
  out.precision_pairs = pairs;
  for (int l = 0; l < 3; ++l) out.pi[l] = pairs ? static_cast<double>(pairs - ok[l]) / static_cast<double>(pairs) : 0.0;

  // Recall: consecutive markers along each chromosome. `sidx` is the rank along the assembly.
  struct Ref {
    MarkerPlacement p;
    std::uint64_t sidx;
  };
  std::vector<Ref> refs;
  for (std::size_t i = 0; i < placed.size(); ++i) refs.push_back({placed[i], i});
  std::sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) { return a.p.ref_rank < b.p.ref_rank; });
  ok = {};
  pairs = 0;
  for (std::size_t i = 0; i + 1 < refs.size(); ++i) {
    const auto& a = refs[i];
    const auto& b = refs[i + 1];
    if (a.p.chrom != b.p.chrom) continue;
    ++pairs;
    if (a.p.scaffold != b.p.scaffold) continue;
    ++ok[0];
    if (a.p.same_strand != b.p.same_strand) continue;
    ++ok[1];
    if (a.p.same_strand ? b.sidx == a.sidx + 1 : a.sidx == b.sidx + 1) ++ok[2];
  }
  out.recall_pairs = pairs;
  for (int l = 0; l < 3; ++l) out.rho[l] = pairs ? static_cast<double>(pairs - ok[l]) / static_cast<double>(pairs) : 0.0;
}

EvalReport evaluate(const MarkerTable& markers, const std::vector<FastaRecord>& assembly, int min_markers) {
  EvalReport r;
  r.m = markers.m;
  r.markers = markers.entries.size();
  for (const auto& e : markers.entries) r.equal_frequency += e.equal_frequency();
  r.seed = markers.seed;
  r.sample_frac = markers.sample_frac;
  r.min_markers = min_markers;
  auto hits = locate_markers(markers, assembly);
  r.completeness = completeness_by_copy(markers, hits);
  r.fidelity = base_fidelity(markers, hits, assembly);
  auto placed = sampled_placements(markers, hits);
  std::vector<std::int64_t> lengths;
  for (const auto& s : assembly) lengths.push_back(static_cast<std::int64_t>(s.seq.size()));
  chromosome_assignment(placed, lengths, min_markers, r.scaffolds);
  order_precision_recall(std::move(placed), r.scaffolds);
  return r;
}

EvalReport evaluate(const std::vector<FastaRecord>& hap_a, const std::vector<FastaRecord>& hap_b,
                    const std::vector<FastaRecord>& assembly, const EvalOptions& opts) {
  return evaluate(extract_markers(hap_a, hap_b, opts.markers), assembly, opts.min_markers);
}

void write_report(std::ostream& out, const EvalReport& r) {
  auto pct = [](std::uint64_t x, std::uint64_t total) {
    return total ? absl::StrFormat("%.2f", 100.0 * static_cast<double>(x) / static_cast<double>(total))
                 : std::string("-");
  };
  out << absl::StrFormat("# completeness: %d-mers present n times in both references\n", r.m);
  out << "n\ttotal\tabsent:fewer:equal:more (%)\n";
  for (const auto& row : r.completeness) {
    std::string fewer = row.label == "1" ? "-" : pct(row.fewer, row.total);
    out << absl::StrFormat("%s\t%d\t%s:%s:%s:%s\n", row.label, row.total, pct(row.absent, row.total), fewer,
                           pct(row.equal, row.total), pct(row.more, row.total));
  }
  const auto& f = r.fidelity;
  out << "\n# fidelity of the base following single-copy markers (per 10 kbp)\n";
  out << absl::StrFormat("loci\t%d\nmu\t%.4f\nmu_M\t%.4f\nmu_U\t%.4f\n", f.loci_assessed, f.mu, f.mu_M, f.mu_U);
  const auto& s = r.scaffolds;
  out << absl::StrFormat("\n# scaffold accuracy (%d sampled markers, min %d per chromosome)\n", s.markers_used,
                         r.min_markers);
  out << absl::StrFormat("f_U (%%)\t%.3f\nf_M (%%)\t%.3f\nf_N (%%)\t%.3f\n", 100 * s.f_U, 100 * s.f_M, 100 * s.f_N);
  for (int l = 0; l < 3; ++l) out << absl::StrFormat("pi_%d (per 10,000 markers)\t%.3f\n", l, 1e4 * s.pi[l]);
  for (int l = 0; l < 3; ++l) out << absl::StrFormat("rho_%d (per 1,000 markers)\t%.3f\n", l, 1e3 * s.rho[l]);

  out << "\n";
  out << absl::StrFormat("marker_len=%d\nmarkers=%d\nequal_frequency=%d\nseed=%d\nsample_frac=%g\nmin_markers=%d\n", r.m,
                         r.markers, r.equal_frequency, r.seed, r.sample_frac, r.min_markers);
  for (const auto& row : r.completeness) {
    std::string n = row.label == "4+" ? "4plus" : row.label;
    out << absl::StrFormat("completeness_n%s_total=%d\n", n, row.total);
    out << absl::StrFormat("completeness_n%s_absent=%s\n", n, pct(row.absent, row.total));
    out << absl::StrFormat("completeness_n%s_fewer=%s\n", n, pct(row.fewer, row.total));
    out << absl::StrFormat("completeness_n%s_equal=%s\n", n, pct(row.equal, row.total));
    out << absl::StrFormat("completeness_n%s_more=%s\n", n, pct(row.more, row.total));
  }
  out << absl::StrFormat("loci_assessed=%d\nmu=%.6f\nmu_M=%.6f\nmu_U=%.6f\n", f.loci_assessed, f.mu, f.mu_M, f.mu_U);
  out << absl::StrFormat("f_U=%.6f\nf_M=%.6f\nf_N=%.6f\n", s.f_U, s.f_M, s.f_N);
  out << absl::StrFormat("precision_pairs=%d\nrecall_pairs=%d\n", s.precision_pairs, s.recall_pairs);
  for (int l = 0; l < 3; ++l)
    out << absl::StrFormat("pi%d_per10k=%.6f\npi%d_per1k=%.6f\n", l, 1e4 * s.pi[l], l, 1e3 * s.pi[l]);
  for (int l = 0; l < 3; ++l)
    out << absl::StrFormat("rho%d_per1k=%.6f\nrho%d_per10k=%.6f\n", l, 1e3 * s.rho[l], l, 1e4 * s.rho[l]);
}

}  // namespace dipasm
