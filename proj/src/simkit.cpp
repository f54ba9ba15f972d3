#include "dipasm/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <tuple>

namespace dipasm::sim {

namespace {

char random_base(std::mt19937_64& rng, double gc) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  if (x < gc / 2) return 'G';
  if (x < gc) return 'C';
  if (x < gc + (1 - gc) / 2) return 'A';
  return 'T';
}

char other_base(std::mt19937_64& rng, char b) {
  std::uniform_int_distribution<int> pick(0, 2);
  int code = base_code(b);
  int r = pick(rng);
  return kBases[r >= code ? r + 1 : r];
}

}  // namespace

std::size_t Genome::total_length() const {
  std::size_t n = 0;
  for (const auto& c : chromosomes) n += c.seq.size();
  return n;
}

Genome generate_genome(const GenomeSpec& spec) {
  if (spec.length == 0 || spec.chromosomes < 1) throw std::invalid_argument("genome length must be positive");
  std::mt19937_64 rng(spec.seed);
  Genome g;
  for (int c = 0; c < spec.chromosomes; ++c) {
    FastaRecord rec{"chr" + std::to_string(c + 1), std::string(spec.length, 'A')};
    for (auto& b : rec.seq) b = random_base(rng, spec.gc);
    g.chromosomes.push_back(std::move(rec));
  }

  // Repeats are pasted over random non-overlapping intervals.
  std::vector<std::pair<int, std::pair<std::size_t, std::size_t>>> used;
  auto overlaps = [&](int chrom, std::size_t a, std::size_t b) {
    for (const auto& [c, iv] : used)
      if (c == chrom && a < iv.second && iv.first < b) return true;
    return false;
  };
  for (std::size_t u = 0; u < spec.repeats.size(); ++u) {
    const auto& unit = spec.repeats[u];
    if (unit.divergence < 0 || unit.divergence >= 1) throw std::invalid_argument("divergence must be in [0,1)");
    if (unit.length == 0 || unit.length > spec.length) throw std::invalid_argument("bad repeat length");
    std::string base(unit.length, 'A');
    for (auto& b : base) b = random_base(rng, spec.gc);
    std::uniform_int_distribution<int> pick_chrom(0, spec.chromosomes - 1);
    std::uniform_int_distribution<std::size_t> pick_pos(0, spec.length - unit.length);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int copy = 0; copy < unit.copies; ++copy) {
      int chrom = 0;
      std::size_t pos = 0;
      for (int tries = 0;; ++tries) {
        if (tries > 10000) throw std::invalid_argument("cannot place repeat copies without overlap");
        chrom = pick_chrom(rng);
        pos = pick_pos(rng);
        if (!overlaps(chrom, pos, pos + unit.length)) break;
      }
      used.push_back({chrom, {pos, pos + unit.length}});
      std::string copy_seq = base;
      if (copy > 0)
        for (auto& b : copy_seq)
          if (u01(rng) < unit.divergence) b = other_base(rng, b);
      g.chromosomes[chrom].seq.replace(pos, unit.length, copy_seq);
      g.repeats.push_back({static_cast<int>(u), copy, chrom, pos, unit.length});
    }
  }
  return g;
}

Diploid apply_variants(const std::vector<FastaRecord>& genome, std::vector<Variant> variants) {
  std::sort(variants.begin(), variants.end(),
            [](const Variant& a, const Variant& b) { return std::tie(a.chrom, a.pos) < std::tie(b.chrom, b.pos); });
  Diploid d;
  d.hap_a = genome;
  d.variants = variants;
  for (std::size_t c = 0; c < genome.size(); ++c) {
    const std::string& a = genome[c].seq;
    std::string b;
    b.reserve(a.size());
    std::size_t cursor = 0;
    for (const auto& v : variants) {
      if (v.chrom != static_cast<int>(c)) continue;
      if (v.pos < cursor || v.pos + v.ref.size() > a.size() || a.compare(v.pos, v.ref.size(), v.ref) != 0)
        throw std::invalid_argument("variant does not match reference at " + std::to_string(v.pos));
      b.append(a, cursor, v.pos - cursor);
      b += v.alt;
      cursor = v.pos + v.ref.size();
    }
    b.append(a, cursor, std::string::npos);
    d.hap_b.push_back({genome[c].name, std::move(b)});
  }
  return d;
}

Diploid diploidize(const std::vector<FastaRecord>& genome, const DiploidSpec& spec) {
  if (spec.snv_rate < 0 || spec.indel_rate < 0) throw std::invalid_argument("variant rates must be nonnegative");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> indel_len(1, std::max(1, spec.max_indel));
  std::bernoulli_distribution coin(0.5);
  std::vector<Variant> vars;
  const std::size_t margin = std::max<std::size_t>(spec.min_spacing, 1);
  for (std::size_t c = 0; c < genome.size(); ++c) {
    const std::string& s = genome[c].seq;
    std::size_t next_ok = margin;
    std::size_t p = next_ok;
    while (p + margin + static_cast<std::size_t>(spec.max_indel) < s.size()) {
      double x = u01(rng);
      if (p >= next_ok && x < spec.snv_rate) {
        vars.push_back({static_cast<int>(c), p, std::string(1, s[p]), std::string(1, other_base(rng, s[p]))});
        next_ok = p + spec.min_spacing;
      } else if (p >= next_ok && x < spec.snv_rate + spec.indel_rate) {
        int len = indel_len(rng);
        Variant v{static_cast<int>(c), p, {}, {}};
        if (coin(rng)) {  // deletion keeps the anchor base
          v.ref = s.substr(p, len + 1);
          v.alt = s.substr(p, 1);
        } else {
          v.ref = s.substr(p, 1);
          v.alt = v.ref;
          for (int i = 0; i < len; ++i) v.alt += random_base(rng, 0.5);
        }
        vars.push_back(v);
        next_ok = p + v.ref.size() + spec.min_spacing;
      }
      ++p;
    }
  }
  return apply_variants(genome, std::move(vars));
}

ReadSet simulate_reads(const std::vector<std::vector<FastaRecord>>& haplotypes, const ReadSpec& spec) {
  const int L = spec.read_length;
  if (spec.coverage <= 0) throw std::invalid_argument("coverage must be positive");
  if (spec.insert_mean < L) throw std::invalid_argument("insert mean must be at least the read length");
  struct Slot {
    int hap, chrom;
    const std::string* seq;
  };
  std::vector<Slot> slots;
  std::vector<double> weights;
  double total = 0;
  for (std::size_t h = 0; h < haplotypes.size(); ++h) {
    for (std::size_t c = 0; c < haplotypes[h].size(); ++c) {
      slots.push_back({static_cast<int>(h), static_cast<int>(c), &haplotypes[h][c].seq});
      weights.push_back(static_cast<double>(haplotypes[h][c].seq.size()));
      total += static_cast<double>(haplotypes[h][c].seq.size());
    }
  }
  if (slots.empty()) throw std::invalid_argument("no haplotype sequence");
  const double genome_len = total / static_cast<double>(haplotypes.size());
  const auto pairs = static_cast<std::size_t>(spec.coverage * genome_len / (2.0 * L) + 0.5);

  std::mt19937_64 rng(spec.seed);
  std::discrete_distribution<std::size_t> pick_slot(weights.begin(), weights.end());
  std::normal_distribution<double> insert(spec.insert_mean, spec.insert_sd);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> q_good(spec.q_min_good, spec.q_max_good);
  std::uniform_int_distribution<int> q_err(spec.q_min_error, spec.q_max_error);
  std::bernoulli_distribution coin(0.5);

  ReadSet rs;
  rs.reads.reserve(2 * pairs);
  rs.origins.reserve(2 * pairs);
  auto make_read = [&](const std::string& src, std::size_t pos, bool rev, std::string name, std::uint8_t slot) {
    QualSeq r;
    r.id = std::move(name);
    r.pair_slot = slot;
    r.bases = src.substr(pos, L);
    if (rev) r.bases = reverse_complement(r.bases);
    r.quals.resize(L);
    for (int i = 0; i < L; ++i) {
      if (spec.error_rate > 0 && u01(rng) < spec.error_rate) {
        r.bases[i] = other_base(rng, r.bases[i]);
        r.quals[i] = static_cast<std::uint8_t>(q_err(rng));
      } else {
        r.quals[i] = static_cast<std::uint8_t>(q_good(rng));
      }
    }
    return r;
  };

  for (std::size_t i = 0; i < pairs; ++i) {
    const Slot& s = slots[pick_slot(rng)];
    const std::size_t n = s.seq->size();
    auto frag = static_cast<std::size_t>(std::max<double>(L, std::round(insert(rng))));
    frag = std::min(frag, n);
    if (frag < static_cast<std::size_t>(L)) continue;
    std::uniform_int_distribution<std::size_t> pick_start(0, n - frag);
    std::size_t start = pick_start(rng);
    bool flip = coin(rng);
    std::string name = spec.prefix + std::to_string(i);
    // Read 1 comes from the fragment's leading end on its own strand.
    std::size_t p1 = flip ? start + frag - L : start;
    std::size_t p2 = flip ? start : start + frag - L;
    rs.reads.push_back(make_read(*s.seq, p1, flip, name, 1));
    rs.reads.push_back(make_read(*s.seq, p2, !flip, name, 2));
    rs.origins.push_back({name, 1, s.hap, s.chrom, p1, flip, start, frag});
    rs.origins.push_back({name, 2, s.hap, s.chrom, p2, !flip, start, frag});
  }
  return rs;
}

void write_repeat_truth(std::ostream& out, const Genome& g) {
  out << "#unit\tcopy\tchrom\tpos\tlength\n";
  for (const auto& r : g.repeats)
    out << r.unit << '\t' << r.copy << '\t' << g.chromosomes[r.chrom].name << '\t' << r.pos << '\t' << r.length << '\n';
}

void write_variant_truth(std::ostream& out, const Diploid& d) {
  out << "#chrom\tpos\tref\talt\n";
  for (const auto& v : d.variants)
    out << d.hap_a[v.chrom].name << '\t' << v.pos << '\t' << v.ref << '\t' << v.alt << '\n';
}

void write_read_truth(std::ostream& out, const ReadSet& rs) {
  out << "#read\tslot\thap\tchrom\tpos\tstrand\tfragment_start\tfragment_length\n";
  for (const auto& o : rs.origins)
    out << o.id << '\t' << int(o.pair_slot) << '\t' << o.hap << '\t' << o.chrom << '\t' << o.pos << '\t'
        << (o.reverse ? '-' : '+') << '\t' << o.fragment_start << '\t' << o.fragment_length << '\n';
}

}  // namespace dipasm::sim
