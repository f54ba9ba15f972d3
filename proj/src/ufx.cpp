#include "dipasm/ufx.hpp"

#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace dipasm {

namespace {

struct Tally {
  std::uint32_t count = 0;
  ExtTallies ext{};
};

using TallyMap = absl::flat_hash_map<Kmer, Tally>;

void tally_read(const QualSeq& read, int k, std::uint8_t q_min, TallyMap& map, std::size_t num_buckets,
                std::size_t part, std::size_t num_parts) {
  for_each_kmer(read, k, [&](const KmerOccurrence& occ) {
    if (num_parts > 1 && prefix_partition(occ.kmer, num_buckets) % num_parts != part) return;
    Tally& t = map[occ.kmer];
    ++t.count;
    if (occ.left && occ.left->qual >= q_min) ++t.ext[0][occ.left->base];
    if (occ.right && occ.right->qual >= q_min) ++t.ext[1][occ.right->base];
  });
}

std::vector<UfxRecord> to_records(const TallyMap& map, std::uint32_t d_min) {
  std::vector<UfxRecord> out;
  out.reserve(map.size());
  for (const auto& [kmer, t] : map) {
    if (t.count < d_min) continue;
    UfxRecord r;
    r.kmer = kmer;
    r.count = t.count;
    r.ext = t.ext;
    r.code = classify_ufx(t.ext);
    out.push_back(r);
  }
  return out;
}

template <typename F>
void run_workers(unsigned n, F&& f) {
  if (n <= 1) {
    f(0u);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(n);
  for (unsigned w = 0; w < n; ++w) pool.emplace_back([&f, w] { f(w); });
}

}  // namespace

UfxCode classify_ufx(const ExtTallies& ext) {
  UfxCode code;
  for (int side = 0; side < 2; ++side) {
    int nonzero = 0, which = -1;
    for (int b = 0; b < 4; ++b) {
      if (ext[side][b] > 0) {
        ++nonzero;
        which = b;
      }
    }
    EndCode c = nonzero == 0 ? EndCode::X : nonzero == 1 ? EndCode::U : EndCode::F;
    std::int8_t base = nonzero == 1 ? static_cast<std::int8_t>(which) : std::int8_t{-1};
    if (side == 0) {
      code.left = c;
      code.left_base = base;
    } else {
      code.right = c;
      code.right_base = base;
    }
  }
  return code;
}

UfxTable::UfxTable(int k, std::vector<UfxRecord> records) : k_(k), records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(), [](const UfxRecord& a, const UfxRecord& b) { return a.kmer < b.kmer; });
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) index_.emplace(records_[i].kmer, static_cast<std::uint32_t>(i));
}

const UfxRecord* UfxTable::find(const Kmer& canonical) const {
  auto it = index_.find(canonical);
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::optional<std::size_t> UfxTable::index_of(const Kmer& canonical) const {
  auto it = index_.find(canonical);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {
constexpr char kUfxMagic[8] = {'D', 'P', 'A', 'S', 'U', 'F', 'X', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void get(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated UFX file");
}
}  // namespace

void UfxTable::write_binary(const std::filesystem::path& path, const std::string& provenance) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kUfxMagic, sizeof(kUfxMagic));
  auto plen = static_cast<std::uint32_t>(provenance.size());
  put(out, plen);
  out.write(provenance.data(), plen);
  put(out, static_cast<std::int32_t>(k_));
  put(out, static_cast<std::uint64_t>(records_.size()));
  for (const auto& r : records_) {
    put(out, r.kmer.words()[0]);
    put(out, r.kmer.words()[1]);
    put(out, r.count);
    for (const auto& side : r.ext)
      for (auto v : side) put(out, v);
    char code[4] = {static_cast<char>(r.code.left), static_cast<char>(r.code.right),
                    static_cast<char>(r.code.left_base), static_cast<char>(r.code.right_base)};
    out.write(code, 4);
  }
}

UfxTable UfxTable::read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kUfxMagic, 8) != 0) throw std::runtime_error("not a UFX file: " + path.string());
  std::uint32_t plen = 0;
  get(in, plen);
  in.ignore(plen);
  std::int32_t k = 0;
  std::uint64_t n = 0;
  get(in, k);
  get(in, n);
  std::vector<UfxRecord> recs(n);
  for (auto& r : recs) {
    r.kmer = Kmer(k);
    get(in, r.kmer.words()[0]);
    get(in, r.kmer.words()[1]);
    get(in, r.count);
    for (auto& side : r.ext)
      for (auto& v : side) get(in, v);
    char code[4];
    in.read(code, 4);
    if (!in) throw std::runtime_error("truncated UFX file");
    r.code.left = static_cast<EndCode>(code[0]);
    r.code.right = static_cast<EndCode>(code[1]);
    r.code.left_base = static_cast<std::int8_t>(code[2]);
    r.code.right_base = static_cast<std::int8_t>(code[3]);
  }
  return UfxTable(k, std::move(recs));
}

void UfxTable::write_text(std::ostream& out) const {
  for (const auto& r : records_) {
    char lb = r.code.left_base >= 0 ? kBases[r.code.left_base] : '-';
    char rb = r.code.right_base >= 0 ? kBases[r.code.right_base] : '-';
    out << r.kmer.to_string() << '\t' << r.count << '\t' << r.code.str() << '\t' << lb << rb << '\n';
  }
}

UfxTable count_kmers(std::span<const QualSeq> reads, const CountOptions& opts) {
  check_k(opts.k);
  const unsigned threads = std::max(1u, opts.threads);
  const std::size_t buckets = std::max<std::size_t>(1, opts.num_buckets);
  const std::size_t parts = std::min<std::size_t>(threads, buckets);
  std::vector<std::vector<UfxRecord>> per_part(parts);
  run_workers(static_cast<unsigned>(parts), [&](unsigned part) {
    TallyMap map;
    for (const auto& read : reads) tally_read(read, opts.k, opts.q_min, map, buckets, part, parts);
    per_part[part] = to_records(map, opts.d_min);
  });
  std::vector<UfxRecord> all;
  std::size_t total = 0;
  for (const auto& p : per_part) total += p.size();
  all.reserve(total);
  for (auto& p : per_part) all.insert(all.end(), p.begin(), p.end());
  return UfxTable(opts.k, std::move(all));
}

UfxTable count_kmers_serial(std::span<const QualSeq> reads, const CountOptions& opts) {
  check_k(opts.k);
  TallyMap map;
  for (const auto& read : reads) tally_read(read, opts.k, opts.q_min, map, 1, 0, 1);
  return UfxTable(opts.k, to_records(map, opts.d_min));
}

KmerHistogram count_spectrum(std::span<const QualSeq> reads, int k, unsigned threads) {
  check_k(k);
  threads = std::max(1u, threads);
  std::vector<KmerHistogram> parts(threads);
  run_workers(threads, [&](unsigned part) {
    absl::flat_hash_map<Kmer, std::uint32_t> counts;
    for (const auto& read : reads) {
      for_each_canonical<2>(read.bases, k, [&](const Kmer& km, bool, int) {
        if (threads > 1 && prefix_partition(km, 256) % threads != part) return;
        ++counts[km];
      });
    }
    for (const auto& [km, c] : counts) parts[part].add(c);
  });
  KmerHistogram h;
  h.k = k;
  for (const auto& p : parts) h.merge(p);
  return h;
}

// ---------------------------------------------------------------------------
// UU contig traversal

namespace {

// A k-mer read in a particular direction. `word` is the oriented sequence.
struct Oriented {
  Kmer word;
  Kmer canon;
  bool flipped = false;
  const UfxRecord* rec = nullptr;
};

Oriented orient(const Kmer& word, const UfxTable& table) {
  Oriented o;
  o.word = word;
  o.canon = word.canonical(&o.flipped);
  o.rec = table.find(o.canon);
  return o;
}

// Unique extension base in the oriented direction, or -1.
int right_ext(const Oriented& o) {
  const auto& c = o.rec->code;
  if (!o.flipped) return c.right == EndCode::U ? c.right_base : -1;
  return c.left == EndCode::U ? 3 - c.left_base : -1;
}

int left_ext(const Oriented& o) {
  const auto& c = o.rec->code;
  if (!o.flipped) return c.left == EndCode::U ? c.left_base : -1;
  return c.right == EndCode::U ? 3 - c.right_base : -1;
}

// Reciprocal step to the right; nullopt when the path ends.
std::optional<Oriented> step_right(const Oriented& cur, const UfxTable& table) {
  int b = right_ext(cur);
  if (b < 0) return std::nullopt;
  Kmer next = cur.word;
  next.push_back(b);
  Oriented o = orient(next, table);
  if (!o.rec || !o.rec->code.is_uu()) return std::nullopt;
  if (left_ext(o) != cur.word.base(0)) return std::nullopt;
  return o;
}

std::optional<Oriented> step_left(const Oriented& cur, const UfxTable& table) {
  int b = left_ext(cur);
  if (b < 0) return std::nullopt;
  Kmer prev = cur.word;
  prev.push_front(b);
  Oriented o = orient(prev, table);
  if (!o.rec || !o.rec->code.is_uu()) return std::nullopt;
  if (right_ext(o) != cur.word.base(cur.word.k() - 1)) return std::nullopt;
  return o;
}

struct Walk {
  std::vector<Kmer> members;  // canonical k-mers
  std::string seq;
  bool cyclic = false;
  int left_ext = -1, right_ext = -1;
};

// Walks the maximal path through `start`. Returns nullopt if it touches a
// k-mer already claimed by a registered walk.
std::optional<Walk> walk_from(const UfxRecord& start, const UfxTable& table, const std::vector<std::atomic<bool>>& visited) {
  const int k = table.k();
  absl::flat_hash_set<Kmer> in_walk;
  in_walk.insert(start.kmer);
  Oriented s{start.kmer, start.kmer, false, &start};

  std::vector<Oriented> right;
  bool cyclic = false;
  Oriented cur = s;
  while (auto nx = step_right(cur, table)) {
    if (nx->canon == s.canon && !nx->flipped) {
      cyclic = true;
      break;
    }
    if (!in_walk.insert(nx->canon).second) break;
    if (visited[*table.index_of(nx->canon)].load(std::memory_order_acquire)) return std::nullopt;
    right.push_back(*nx);
    cur = *nx;
  }
  std::vector<Oriented> left;
  if (!cyclic) {
    cur = s;
    while (auto pv = step_left(cur, table)) {
      if (!in_walk.insert(pv->canon).second) break;
      if (visited[*table.index_of(pv->canon)].load(std::memory_order_acquire)) return std::nullopt;
      left.push_back(*pv);
      cur = *pv;
    }
  }

  std::vector<Oriented> path;
  path.reserve(left.size() + 1 + right.size());
  for (auto it = left.rbegin(); it != left.rend(); ++it) path.push_back(*it);
  path.push_back(s);
  path.insert(path.end(), right.begin(), right.end());

  Walk w;
  w.cyclic = cyclic;
  if (cyclic) {
    // Rotate so the least k-mer leads, read in its canonical direction.
    std::size_t least = 0;
    for (std::size_t i = 1; i < path.size(); ++i)
      if (path[i].canon < path[least].canon) least = i;
    std::rotate(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(least), path.end());
    if (path[0].flipped) {
      // Reverse the cycle direction so the leading k-mer reads canonically.
      std::vector<Oriented> rev;
      Oriented c0 = path[0];
      c0.word = c0.canon;
      c0.flipped = false;
      rev.push_back(c0);
      Oriented c = c0;
      for (std::size_t i = 1; i < path.size(); ++i) {
        auto nx = step_right(c, table);
        if (!nx) break;
        rev.push_back(*nx);
        c = *nx;
      }
      path = std::move(rev);
    }
  }

  w.seq = path.front().word.to_string();
  w.seq.reserve(path.size() + k - 1);
  for (std::size_t i = 1; i < path.size(); ++i) w.seq.push_back(kBases[path[i].word.base(k - 1)]);
  w.left_ext = left_ext(path.front());
  w.right_ext = right_ext(path.back());
  for (const auto& o : path) w.members.push_back(o.canon);
  return w;
}

}  // namespace

std::vector<UUContig> traverse_uu_contigs(const UfxTable& table, unsigned threads) {
  threads = std::max(1u, threads);
  const auto& recs = table.records();
  std::vector<std::atomic<bool>> visited(recs.size());
  for (auto& v : visited) v.store(false, std::memory_order_relaxed);
  absl::flat_hash_set<Kmer> registry;
  std::mutex registry_mu;
  std::vector<std::vector<Walk>> found(threads);

  run_workers(threads, [&](unsigned t) {
    for (std::size_t i = t; i < recs.size(); i += threads) {
      if (!recs[i].code.is_uu() || visited[i].load(std::memory_order_acquire)) continue;
      auto w = walk_from(recs[i], table, visited);
      if (!w) continue;
      Kmer least = *std::min_element(w->members.begin(), w->members.end());
      {
        std::lock_guard lock(registry_mu);
        if (!registry.insert(least).second) continue;
        for (const auto& m : w->members) visited[*table.index_of(m)].store(true, std::memory_order_release);
      }
      found[t].push_back(std::move(*w));
    }
  });

  std::vector<UUContig> out;
  for (auto& fw : found) {
    for (auto& w : fw) {
      UUContig c;
      c.cyclic = w.cyclic;
      std::string rc = reverse_complement(w.seq);
      if (!w.cyclic && rc < w.seq) {
        c.seq = std::move(rc);
        if (w.right_ext >= 0) c.left_ext = kBases[3 - w.right_ext];
        if (w.left_ext >= 0) c.right_ext = kBases[3 - w.left_ext];
      } else {
        c.seq = std::move(w.seq);
        if (w.left_ext >= 0) c.left_ext = kBases[w.left_ext];
        if (w.right_ext >= 0) c.right_ext = kBases[w.right_ext];
      }
      double sum = 0;
      for (const auto& m : w.members) sum += table.find(m)->count;
      c.mean_depth = sum / static_cast<double>(w.members.size());
      out.push_back(std::move(c));
    }
  }
  std::sort(out.begin(), out.end(), [](const UUContig& a, const UUContig& b) { return a.seq < b.seq; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<std::uint32_t>(i);
  return out;
}

double contig_depth(std::string_view seq, const UfxTable& table) {
  double sum = 0;
  std::size_t n = 0;
  for_each_canonical<2>(seq, table.k(), [&](const Kmer& km, bool, int) {
    if (const auto* r = table.find(km)) {
      sum += r->count;
      ++n;
    }
  });
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace dipasm
