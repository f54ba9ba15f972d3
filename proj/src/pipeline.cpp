#include "dipasm/pipeline.hpp"

#include <absl/strings/numbers.h>
#include <absl/strings/str_format.h>
#include <absl/strings/str_join.h>
#include <absl/strings/str_split.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iterator>

#include <set>
#include <sstream>

#include "json.hpp"
#include "dipasm/bubbletig.hpp"
#include "dipasm/gap_closer.hpp"
#include "dipasm/mer_aligner.hpp"
#include "dipasm/scaffolder.hpp"
#include "dipasm/seqio.hpp"
#include "dipasm/spectrum.hpp"
#include "dipasm/ufx.hpp"

namespace fs = std::filesystem;

namespace dipasm {

// ---- config ----

namespace {

bool parse_bool(const std::string& v, bool& out) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") {
    out = true;
    return true;
  }
  if (v == "false" || v == "no" || v == "0" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v, int line) {
  T out{};
  bool ok;
  if constexpr (std::is_floating_point_v<T>) {
    ok = absl::SimpleAtod(v, &out);
  } else {
    ok = absl::SimpleAtoi(v, &out);
  }
  if (!ok) throw ConfigError(absl::StrFormat("line %d: %s: not a number: %s", line, key, v));
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

fs::path resolve(const fs::path& base, const std::string& v) {
  fs::path p(v);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

RunConfig parse_config(std::istream& in, const fs::path& base_dir) {
  RunConfig cfg;
  std::string raw;
  int line = 0;
  LibraryConfig* lib = nullptr;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    if (s == "[library]") {
      lib = &cfg.libraries.emplace_back();
      continue;
    }
    if (s.front() == '[') throw ConfigError(absl::StrFormat("line %d: unknown section %s", line, s));
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(absl::StrFormat("line %d: expected key = value", line));
    std::string key = trim(std::string_view(s).substr(0, eq));
    std::string v = trim(std::string_view(s).substr(eq + 1));
    auto need_bool = [&](bool& out) {
      if (!parse_bool(v, out)) throw ConfigError(absl::StrFormat("line %d: %s: expected true/false", line, key));
    };
    if (lib) {
      if (key == "name") {
        lib->name = v;
      } else if (key == "reads") {
        lib->reads = resolve(base_dir, v);
      } else if (key == "insert_mean") {
        lib->insert_mean = parse_number<double>(key, v, line);
      } else if (key == "insert_sd") {
        lib->insert_sd = parse_number<double>(key, v, line);
      } else if (key == "tier") {
        lib->tier = parse_number<int>(key, v, line);
      } else if (key == "role") {
        if (v != "fragment" && v != "matepair") throw ConfigError(absl::StrFormat("line %d: role: fragment or matepair", line));
        lib->mate_pair = v == "matepair";
      } else if (key == "orientation") {
        if (v != "innie" && v != "outie") throw ConfigError(absl::StrFormat("line %d: orientation: innie or outie", line));
        lib->innie = v == "innie";
      } else if (key == "count") {
        bool b = false;
        need_bool(b);
        lib->count = b;
      } else {
        throw ConfigError(absl::StrFormat("line %d: unknown library key %s", line, key));
      }
      continue;
    }
    if (key == "k") {
      cfg.k = parse_number<int>(key, v, line);
    } else if (key == "d_min") {
      cfg.d_min = parse_number<std::uint32_t>(key, v, line);
    } else if (key == "q_min") {
      cfg.q_min = parse_number<int>(key, v, line);
    } else if (key == "diploid") {
      need_bool(cfg.diploid);
    } else if (key == "min_support") {
      cfg.min_support.clear();
      for (const std::string& t : std::vector<std::string>(absl::StrSplit(v, absl::ByAnyChar(", "), absl::SkipEmpty())))
        cfg.min_support.push_back(parse_number<std::uint32_t>(key, t, line));
    } else if (key == "min_gap_ns") {
      cfg.min_gap_ns = parse_number<int>(key, v, line);
    } else if (key == "repeat_copy_count") {
      cfg.repeat_copy_count = parse_number<double>(key, v, line);
    } else if (key == "aggressive") {
      need_bool(cfg.aggressive);
    } else if (key == "output") {
      cfg.output = v;
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(key, v, line);
    } else if (key == "threads") {
      cfg.threads = parse_number<unsigned>(key, v, line);
    } else {
      throw ConfigError(absl::StrFormat("line %d: unknown key %s", line, key));
    }
  }
  if (cfg.output.is_relative() && !base_dir.empty()) cfg.output = base_dir / cfg.output;
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in, path.parent_path());
}

namespace {

void write_config_body(std::ostream& out, const RunConfig& c, bool for_digest) {
  out << "k = " << c.k << "\nd_min = " << c.d_min << "\nq_min = " << c.q_min
      << "\ndiploid = " << (c.diploid ? "true" : "false") << "\nmin_support = " << absl::StrJoin(c.min_support, ",")
      << "\nmin_gap_ns = " << c.min_gap_ns << "\nrepeat_copy_count = " << absl::StrFormat("%g", c.repeat_copy_count)
      << "\naggressive = " << (c.aggressive ? "true" : "false") << "\nseed = " << c.seed << '\n';
  if (!for_digest) out << "output = " << c.output.string() << "\nthreads = " << c.threads << '\n';
  for (const auto& l : c.libraries) {
    out << "\n[library]\nname = " << l.name << '\n';
    if (for_digest) {
      std::error_code ec;
      out << "reads_sha256 = " << (fs::exists(l.reads, ec) ? sha256_file(l.reads) : "missing") << '\n';
    } else {
      out << "reads = " << l.reads.string() << '\n';
    }
    out << "insert_mean = " << absl::StrFormat("%g", l.insert_mean)
        << "\ninsert_sd = " << absl::StrFormat("%g", l.insert_sd) << "\ntier = " << l.tier
        << "\nrole = " << (l.mate_pair ? "matepair" : "fragment") << "\norientation = " << (l.innie ? "innie" : "outie")
        << "\ncount = " << (l.counted() ? "true" : "false") << '\n';
  }
}

}  // namespace

void write_config(std::ostream& out, const RunConfig& cfg) { write_config_body(out, cfg, false); }

ConfigCheck validate_config(RunConfig cfg) {
  ConfigCheck chk;
  auto err = [&](std::string f, std::string m) { chk.errors.push_back({std::move(f), std::move(m)}); };
  if (cfg.k % 2 == 0) {
    err("k", "k must be odd");
  } else if (cfg.k < 3 || cfg.k > Kmer::kMaxK) {
    err("k", absl::StrFormat("k must be in [3, %d]", Kmer::kMaxK));
  }
  if (cfg.d_min < 1) err("d_min", "d_min must be at least 1");
  if (cfg.q_min < 0 || cfg.q_min > 93) err("q_min", "q_min must be in [0, 93]");
  if (cfg.min_gap_ns < 1) err("min_gap_ns", "min_gap_ns must be positive");
  if (cfg.repeat_copy_count <= 0) err("repeat_copy_count", "repeat_copy_count must be positive");
  if (cfg.threads < 1) err("threads", "threads must be at least 1");
  if (cfg.min_support.empty()) err("min_support", "min_support needs at least one threshold");
  for (auto t : cfg.min_support)
    if (t == 0) err("min_support", "min_support thresholds must be positive");
  if (cfg.libraries.empty()) err("libraries", "at least one [library] section is required");

  std::set<std::string> names;
  std::set<int> tiers;
  bool any_counted = false;
  for (std::size_t i = 0; i < cfg.libraries.size(); ++i) {
    auto& l = cfg.libraries[i];
    std::string f = absl::StrFormat("library[%d]", i);
    if (l.name.empty()) l.name = absl::StrFormat("lib%d", i);
    if (!names.insert(l.name).second) err(f + ".name", "duplicate library name " + l.name);
    std::error_code ec;
    if (l.reads.empty()) {
      err(f + ".reads", "library " + l.name + ": reads file not set");
    } else if (!fs::is_regular_file(l.reads, ec)) {
      err(f + ".reads", "library " + l.name + ": reads file not found: " + l.reads.string());
    }
    if (l.insert_mean <= 0) err(f + ".insert_mean", "library " + l.name + ": insert_mean must be positive");
    if (l.insert_sd <= 0) err(f + ".insert_sd", "library " + l.name + ": insert_sd must be positive");
    if (l.tier < 0) err(f + ".tier", "library " + l.name + ": tier must be non-negative");
    tiers.insert(l.tier);
    if (!l.count) l.count = !l.mate_pair;
    if (l.mate_pair && *l.count)
      chk.warnings.push_back({f + ".count", "library " + l.name + ": mate-pair library marked for counting; "
                                            "k-mers are normally counted from fragment libraries only"});
    any_counted = any_counted || *l.count;
  }
  if (!cfg.libraries.empty() && !any_counted) err("libraries", "no library is marked for k-mer counting");
  int expect = 0;
  for (int t : tiers) {
    if (t < 0) continue;
    if (t != expect) err("library.tier", absl::StrFormat("tier gap: no library in tier %d", expect));
    expect = t + 1;
  }
  chk.config = std::move(cfg);
  return chk;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string out;
  for (unsigned i = 0; i < len; ++i) out += absl::StrFormat("%02x", md[i]);
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string out;
  for (unsigned i = 0; i < len; ++i) out += absl::StrFormat("%02x", md[i]);
  return out;
}

std::string config_digest(const RunConfig& cfg) {
  std::ostringstream os;
  write_config_body(os, cfg, true);
  return sha256_hex(os.str());
}

std::string_view stage_name(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

std::optional<Stage> stage_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i)
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  return std::nullopt;
}

// ---- state ----

RunState RunState::load(const fs::path& path) {
  RunState st;
  std::ifstream in(path);
  if (!in) return st;
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return st;
  st.config_digest = j.value("config_digest", "");
  const auto stages = j.value("stages", nlohmann::json::object());
  for (const auto& [name, s] : stages.items()) {
    if (!s.is_object()) continue;
    StageRecord r;
    r.status = s.value("status", "pending");
    r.input_digest = s.value("input_digest", "");
    r.message = s.value("message", "");
    const auto outs = s.value("outputs", nlohmann::json::object());
    for (const auto& [f, d] : outs.items()) r.outputs[f] = d.get<std::string>();
    st.stages[name] = r;
  }
  return st;
}

void RunState::save(const fs::path& path) const {
  nlohmann::json j;
  j["config_digest"] = config_digest;
  j["stages"] = nlohmann::json::object();
  for (const auto& [name, r] : stages) {
    nlohmann::json outs = nlohmann::json::object();
    for (const auto& [f, d] : r.outputs) outs[f] = d;
    nlohmann::json s = nlohmann::json::object();
    s["status"] = r.status;
    s["input_digest"] = r.input_digest;
    s["outputs"] = std::move(outs);
    s["message"] = r.message;
    j["stages"][name] = std::move(s);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

// ---- stages ----

namespace {

struct Objects {
  std::vector<std::string> names;
  std::vector<std::string> seqs;
  std::vector<double> depths;
};

class Context {
 public:
  Context(const RunConfig& cfg, std::string digest) : cfg_(cfg), digest_(std::move(digest)) {}

  const RunConfig& cfg() const { return cfg_; }
  fs::path path(const std::string& rel) const { return cfg_.output / rel; }

  // Opens an output file with a provenance line; `marker` is the comment prefix.
  std::ofstream open(const std::string& rel, char marker = '#') {
    fs::create_directories(path(rel).parent_path());
    std::ofstream out(path(rel));
    if (!out) throw std::runtime_error("cannot write " + path(rel).string());
    out << marker << provenance() << '\n';
    outputs_.push_back(rel);
    return out;
  }
  void add_output(const std::string& rel) { outputs_.push_back(rel); }
  std::string provenance() const { return absl::StrFormat("stage=%s config=%s", stage_, digest_); }

  void begin(Stage s) {
    stage_ = std::string(stage_name(s));
    outputs_.clear();
  }
  const std::vector<std::string>& outputs() const { return outputs_; }

  const std::vector<std::vector<QualSeq>>& reads() {
    if (reads_.empty()) {
      for (const auto& l : cfg_.libraries) reads_.push_back(read_fastq(l.reads));
    }
    return reads_;
  }
  std::vector<QualSeq> all_reads() {
    std::vector<QualSeq> out;
    for (const auto& r : reads()) out.insert(out.end(), r.begin(), r.end());
    return out;
  }
  std::vector<QualSeq> counted_reads() {
    std::vector<QualSeq> out;
    for (std::size_t i = 0; i < cfg_.libraries.size(); ++i)
      if (cfg_.libraries[i].counted()) out.insert(out.end(), reads()[i].begin(), reads()[i].end());
    return out;
  }
  std::vector<Library> libraries() const {
    std::vector<Library> out;
    for (const auto& l : cfg_.libraries) out.push_back({l.name, l.insert_mean, l.insert_sd, l.innie, l.tier});
    return out;
  }
  std::vector<std::uint16_t> library_of(std::span<const ReadAlignment> alns) {
    std::vector<std::uint32_t> ends;
    std::uint32_t acc = 0;
    for (const auto& r : reads()) ends.push_back(acc += static_cast<std::uint32_t>(r.size()));
    std::vector<std::uint16_t> out;
    for (const auto& a : alns) {
      auto it = std::upper_bound(ends.begin(), ends.end(), a.read_index);
      out.push_back(static_cast<std::uint16_t>(it - ends.begin()));
    }
    return out;
  }

 private:
  const RunConfig& cfg_;
  std::string digest_;
  std::string stage_;
  std::vector<std::string> outputs_;
  std::vector<std::vector<QualSeq>> reads_;
};

std::map<std::string, std::string> read_kv(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

double spectrum_d_max(Context& ctx) {
  auto kv = read_kv(ctx.path("mercount/spectrum.txt"));
  double d = 0;
  if (!kv.count("d_max") || !absl::SimpleAtod(kv["d_max"], &d)) throw std::runtime_error("spectrum report lacks d_max");
  return d;
}

void stage_import(Context& ctx) {
  auto out = ctx.open("import/manifest.tsv");
  out << "library\treads_sha256\treads\tpaired\tmax_length\tmean_length\n";
  const auto& reads = ctx.reads();
  for (std::size_t i = 0; i < reads.size(); ++i) {
    const auto& l = ctx.cfg().libraries[i];
    std::size_t paired = 0, longest = 0, total = 0;
    for (const auto& r : reads[i]) {
      paired += r.pair_slot != 0;
      longest = std::max(longest, r.bases.size());
      total += r.bases.size();
    }
    if (reads[i].empty()) throw std::runtime_error("library " + l.name + " has no reads");
    out << absl::StrFormat("%s\t%s\t%d\t%d\t%d\t%.2f\n", l.name, sha256_file(l.reads), reads[i].size(), paired, longest,
                           static_cast<double>(total) / static_cast<double>(reads[i].size()));
  }
}

void stage_mercount(Context& ctx) {
  auto reads = ctx.counted_reads();
  auto hist = count_spectrum(reads, ctx.cfg().k, ctx.cfg().threads);
  {
    auto out = ctx.open("mercount/histogram.tsv");
    write_histogram(out, hist);
  }
  std::size_t longest = 0;
  for (const auto& r : reads) longest = std::max(longest, r.bases.size());
  auto out = ctx.open("mercount/spectrum.txt");
  try {
    auto fit = analyze_spectrum(hist, {.num_reads = reads.size(), .read_length = static_cast<int>(longest)});
    write_spectrum_report(out, hist, fit);
    out << "fit=ok\n";
  } catch (const FitError& e) {
    // Fall back to the histogram mode above the error floor.
    std::uint64_t floor = error_floor(hist), best = 0, mode = 0;
    for (const auto& [f, n] : hist.counts_at_freq)
      if (f > floor && n > best) {
        best = n;
        mode = f;
      }
    spdlog::warn("spectrum fit failed ({}); using histogram mode {} as d_max", e.what(), mode);
    out << "k=" << hist.k << "\nd_max=" << mode << "\nfit=failed\n";
  }
}

void stage_mergraph(Context& ctx) {
  const auto& c = ctx.cfg();
  auto table = count_kmers(ctx.counted_reads(), {.k = c.k, .d_min = c.d_min, .q_min = static_cast<std::uint8_t>(c.q_min),
                                                 .threads = c.threads});
  fs::create_directories(ctx.path("mergraph"));
  table.write_binary(ctx.path("mergraph/ufx.bin"), ctx.provenance());
  ctx.add_output("mergraph/ufx.bin");
}

void stage_ufx(Context& ctx) {
  auto table = UfxTable::read_binary(ctx.path("mergraph/ufx.bin"));
  std::map<std::string, std::size_t> codes;
  for (const auto& r : table.records()) ++codes[r.code.str()];
  auto out = ctx.open("ufx/summary.tsv");
  out << "code\tkmers\n";
  for (const auto& [code, n] : codes) out << code << '\t' << n << '\n';
  auto txt = ctx.open("ufx/ufx.txt");
  table.write_text(txt);
}

void stage_contigs(Context& ctx) {
  auto table = UfxTable::read_binary(ctx.path("mergraph/ufx.bin"));
  auto contigs = traverse_uu_contigs(table, ctx.cfg().threads);
  std::vector<FastaRecord> recs;
  for (const auto& c : contigs) recs.push_back({"contig_" + std::to_string(c.id), c.seq});
  fs::create_directories(ctx.path("contigs"));
  write_fasta(ctx.path("contigs/uutigs.fa"), recs, ctx.provenance());
  ctx.add_output("contigs/uutigs.fa");
  auto out = ctx.open("contigs/uutigs.tsv");
  out << "name\tlength\tdepth\tleft_ext\tright_ext\tcyclic\n";
  for (const auto& c : contigs)
    out << absl::StrFormat("contig_%d\t%d\t%.4f\t%c\t%c\t%d\n", c.id, c.length(), c.mean_depth, c.left_ext.value_or('-'),
                           c.right_ext.value_or('-'), c.cyclic ? 1 : 0);
}

std::vector<UUContig> load_contigs(Context& ctx) {
  auto recs = read_fasta(ctx.path("contigs/uutigs.fa"));
  std::vector<UUContig> out(recs.size());
  std::ifstream in(ctx.path("contigs/uutigs.tsv"));
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("name\t", 0) == 0) continue;
    std::vector<std::string> f = absl::StrSplit(line, '\t');
    if (f.size() != 6 || i >= out.size() || f[0] != recs[i].name) throw std::runtime_error("contig table mismatch");
    auto& c = out[i];
    c.id = static_cast<std::uint32_t>(std::stoul(f[0].substr(7)));
    c.seq = recs[i].seq;
    c.mean_depth = std::stod(f[2]);
    if (f[3] != "-") c.left_ext = f[3][0];
    if (f[4] != "-") c.right_ext = f[4][0];
    c.cyclic = f[5] == "1";
    ++i;
  }
  if (i != out.size()) throw std::runtime_error("contig table mismatch");
  return out;
}

void write_objects(Context& ctx, const std::string& dir, const Objects& o) {
  std::vector<FastaRecord> recs;
  for (std::size_t i = 0; i < o.names.size(); ++i) recs.push_back({o.names[i], o.seqs[i]});
  fs::create_directories(ctx.path(dir));
  write_fasta(ctx.path(dir + "/objects.fa"), recs, ctx.provenance());
  ctx.add_output(dir + "/objects.fa");
  auto out = ctx.open(dir + "/objects.tsv");
  out << "name\tlength\tdepth\n";
  for (std::size_t i = 0; i < o.names.size(); ++i)
    out << absl::StrFormat("%s\t%d\t%.4f\n", o.names[i], o.seqs[i].size(), o.depths[i]);
}

Objects load_objects(Context& ctx) {
  std::string dir = ctx.cfg().diploid ? "bubble" : "contigs";
  Objects o;
  if (!ctx.cfg().diploid) {
    for (const auto& c : load_contigs(ctx)) {
      o.names.push_back("contig_" + std::to_string(c.id));
      o.seqs.push_back(c.seq);
      o.depths.push_back(c.mean_depth);
    }
    return o;
  }
  for (auto& r : read_fasta(ctx.path("bubble/objects.fa"))) {
    o.names.push_back(r.name);
    o.seqs.push_back(std::move(r.seq));
  }
  std::ifstream in(ctx.path("bubble/objects.tsv"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("name\t", 0) == 0) continue;
    std::vector<std::string> f = absl::StrSplit(line, '\t');
    o.depths.push_back(std::stod(f.at(2)));
  }
  if (o.depths.size() != o.names.size()) throw std::runtime_error("object table mismatch");
  return o;
}

void stage_bubble(Context& ctx) {
  const int k = ctx.cfg().k;
  auto table = UfxTable::read_binary(ctx.path("mergraph/ufx.bin"));
  auto contigs = load_contigs(ctx);
  const double d_max = spectrum_d_max(ctx);
  auto bubbles = detect_bubbles(contigs, table);
  auto chains = chain_diplotigs(contigs, bubbles, k);
  auto isotigs = select_isotigs(contigs, chains.leftovers, k, d_max);
  Objects o;
  for (const auto& d : chains.diplotigs) {
    o.names.push_back("diplotig_" + std::to_string(d.id));
    o.seqs.push_back(d.consensus);
    o.depths.push_back(d.mean_depth);
  }
  absl::flat_hash_map<std::uint32_t, std::size_t> by_id;
  for (std::size_t i = 0; i < contigs.size(); ++i) by_id[contigs[i].id] = i;
  for (const auto& t : isotigs) {
    o.names.push_back("isotig_" + std::to_string(t.contig));
    o.seqs.push_back(contigs[by_id.at(t.contig)].seq);
    o.depths.push_back(t.depth);
  }
  write_objects(ctx, "bubble", o);
  {
    auto out = ctx.open("bubble/alt_alleles.tsv");
    write_alt_alleles(out, chains.diplotigs);
  }
  auto out = ctx.open("bubble/bubble_stats.tsv");
  out << absl::StrFormat("bubbles=%d\ndiplotigs=%d\nisotigs=%d\n", bubbles.size(), chains.diplotigs.size(),
                         isotigs.size());
  write_bubble_stats(out, bubble_stats(bubbles, d_max));
}

void stage_merblast(Context& ctx) {
  auto objs = load_objects(ctx);
  SeedIndex index(objs.seqs, ctx.cfg().k);
  auto reads = ctx.all_reads();
  auto alns = align_reads(reads, index, ctx.cfg().threads);
  {
    auto out = ctx.open("merblast/alignments.tsv");
    write_alignments(out, alns, objs.names);
  }
  auto out = ctx.open("merblast/libraries.tsv");
  out << "library\tfirst_read\treads\n";
  std::size_t first = 0;
  for (std::size_t i = 0; i < ctx.cfg().libraries.size(); ++i) {
    out << absl::StrFormat("%s\t%d\t%d\n", ctx.cfg().libraries[i].name, first, ctx.reads()[i].size());
    first += ctx.reads()[i].size();
  }
}

std::vector<ReadAlignment> load_alignments(Context& ctx, const Objects& objs) {
  absl::flat_hash_map<std::string, std::uint32_t> ids;
  for (std::uint32_t i = 0; i < objs.names.size(); ++i) ids[objs.names[i]] = i;
  std::ifstream in(ctx.path("merblast/alignments.tsv"));
  return read_alignments(in, ids);
}

void stage_ono(Context& ctx) {
  auto objs = load_objects(ctx);
  auto alns = load_alignments(ctx, objs);
  std::vector<ObjectInfo> base;
  for (std::size_t i = 0; i < objs.seqs.size(); ++i)
    base.push_back({static_cast<std::int64_t>(objs.seqs[i].size()), objs.depths[i]});
  auto res = scaffold_tiers(base, alns, ctx.library_of(alns), ctx.libraries(),
                            {.thresholds = ctx.cfg().min_support, .min_anchor = ctx.cfg().k, .threads = ctx.cfg().threads});
  {
    auto out = ctx.open("ono/scaffolds.srf");
    write_srf(out, res.layouts, objs.names);
  }
  auto out = ctx.open("ono/tiers.tsv");
  out << "tier\tlibraries\tmin_support\tedges\tjoins\tn50\tl50\ttotal\n";
  for (std::size_t t = 0; t < res.tiers.size(); ++t) {
    const auto& r = res.tiers[t];
    std::vector<std::string> names;
    for (auto i : r.libraries) names.push_back(ctx.cfg().libraries[i].name);
    out << absl::StrFormat("%d\t%s\t%d\t%d\t%d\t%d\t%d\t%d\n", t, absl::StrJoin(names, ","), r.threshold, r.edges, r.joins,
                           r.n50.n50, r.n50.l50, r.n50.total);
  }
}

void stage_gap_closure(Context& ctx) {
  const auto& c = ctx.cfg();
  auto objs = load_objects(ctx);
  auto alns = load_alignments(ctx, objs);
  absl::flat_hash_map<std::string, std::uint32_t> ids;
  for (std::uint32_t i = 0; i < objs.names.size(); ++i) ids[objs.names[i]] = i;
  std::vector<ScaffoldLayout> layouts;
  {
    std::ifstream in(ctx.path("ono/scaffolds.srf"));
    layouts = read_srf(in, ids);
  }
  auto reads = ctx.all_reads();
  auto tasks = project_reads(layouts, objs.seqs, alns, ctx.library_of(alns), ctx.libraries(), reads);
  GapCloseOptions go{.k = c.k,
                     .k_floor = std::min(21, c.k),
                     .polymorphic = c.diploid,
                     .aggressive = c.aggressive,
                     .repeat_copy_count = c.repeat_copy_count,
                     .d_max = spectrum_d_max(ctx)};
  auto closures = close_gaps(tasks, go, c.threads);
  {
    auto out = ctx.open("gap_closure/closures.tsv");
    write_closure_report(out, closures);
  }
  auto recs = render_scaffolds(layouts, objs.seqs, closures, {.min_gap_ns = c.min_gap_ns, .aggressive = c.aggressive});
  write_fasta(ctx.path(std::string(kFinalFasta)), recs, ctx.provenance());
  ctx.add_output(std::string(kFinalFasta));
  std::size_t closed = 0;
  for (const auto& cl : closures) closed += cl.accepted;
  spdlog::info("gap_closure: {} of {} gaps closed", closed, closures.size());
}

using StageFn = std::function<void(Context&)>;

const std::array<StageFn, 9> kStageFns{stage_import, stage_mercount, stage_mergraph,   stage_ufx,        stage_contigs,
                                       stage_bubble, stage_merblast, stage_ono,        stage_gap_closure};

bool outputs_intact(const RunConfig& cfg, const StageRecord& r) {
  for (const auto& [rel, digest] : r.outputs) {
    std::error_code ec;
    if (!fs::is_regular_file(cfg.output / rel, ec) || sha256_file(cfg.output / rel) != digest) return false;
  }
  return true;
}

}  // namespace

RunResult run_pipeline(const RunConfig& raw, const RunOptions& opts) {
  RunResult res;
  auto chk = validate_config(raw);
  for (const auto& w : chk.warnings) spdlog::warn("{}: {}", w.field, w.message);
  if (!chk.ok()) {
    std::vector<std::string> msgs;
    for (const auto& e : chk.errors) msgs.push_back(e.field + ": " + e.message);
    res.exit_code = 1;
    res.error = absl::StrJoin(msgs, "\n");
    return res;
  }
  const RunConfig& cfg = chk.config;
  const Stage from = opts.from.value_or(Stage::Import);
  const Stage to = opts.to.value_or(Stage::GapClosure);
  if (from > to) {
    res.exit_code = 1;
    res.error = "stage range is empty";
    return res;
  }
  fs::create_directories(cfg.output);
  const fs::path state_path = cfg.output / "state.json";
  RunState state = RunState::load(state_path);
  const std::string digest = config_digest(cfg);
  state.config_digest = digest;
  Context ctx(cfg, digest);

  std::string chain = digest;
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    const auto s = static_cast<Stage>(i);
    if (s > to) break;
    const std::string name(stage_name(s));
    StageRecord& rec = state.stages[name];
    const std::string input = sha256_hex(name + "\n" + chain);
    const bool finished = (rec.status == "done" || rec.status == "skipped") && rec.input_digest == input;
    if (s < from) {
      if (!finished || !outputs_intact(cfg, rec)) {
        res.exit_code = 2;
        res.error = "upstream stage " + name + " is not complete";
        state.save(state_path);
        return res;
      }
    } else if (!opts.force && finished && outputs_intact(cfg, rec)) {
      res.up_to_date.push_back(name);
    } else if (s == Stage::Bubble && !cfg.diploid) {
      rec = {.status = "skipped", .input_digest = input, .message = "haploid run"};
      res.executed.push_back(name);
    } else {
      spdlog::info("stage {}", name);
      ctx.begin(s);
      try {
        kStageFns[i](ctx);
      } catch (const std::exception& e) {
        rec = {.status = "failed", .input_digest = input, .message = e.what()};
        state.save(state_path);
        spdlog::error("stage {} failed: {}", name, e.what());
        res.exit_code = 2;
        res.error = "stage " + name + " failed: " + e.what();
        return res;
      }
      rec = {.status = "done", .input_digest = input};
      for (const auto& rel : ctx.outputs()) rec.outputs[rel] = sha256_file(cfg.output / rel);
      res.executed.push_back(name);
      state.save(state_path);
    }
    for (const auto& [rel, d] : rec.outputs) chain += "\n" + rel + "=" + d;
  }
  state.save(state_path);
  return res;
}

}  // namespace dipasm
