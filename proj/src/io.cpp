#include "ksflow/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ksflow {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  }
}

long long to_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_flat_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::invalid_argument("config: malformed section at line " + std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " + std::to_string(lineno));
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config: empty key at line " + std::to_string(lineno));
    kv[section.empty() ? key : section + "." + key] = val;
  }
  return kv;
}

ExperimentConfig config_from_text(const std::string& text) {
  auto kv = parse_flat_config(text);
  ExperimentConfig cfg;
  auto has = [&](const std::string& k) { return kv.count(k) != 0; };
  auto get = [&](const std::string& k) { return kv.at(k); };

  if (has("grid.d")) cfg.d = static_cast<int>(to_int(get("grid.d"), "grid.d"));
  if (has("grid.n")) cfg.n = static_cast<int>(to_int(get("grid.n"), "grid.n"));
  if (has("grid.L")) cfg.half_length = to_double(get("grid.L"), "grid.L");
  if (cfg.d < 1 || cfg.d > 2 || cfg.n < 4 || cfg.half_length <= 0.0)
    throw std::invalid_argument("config: grid requires d in {1,2}, n >= 4, L > 0");

  if (has("interaction.lambda1")) cfg.interaction.lambda1 = to_double(get("interaction.lambda1"), "lambda1");
  if (has("interaction.lambda2")) cfg.interaction.lambda2 = to_double(get("interaction.lambda2"), "lambda2");
  if (has("interaction.beta")) cfg.interaction.beta = to_double(get("interaction.beta"), "beta");
  if (has("interaction.potential")) {
    const std::string p = get("interaction.potential");
    if (p == "none")
      cfg.interaction.potential.kind = PotentialKind::none;
    else if (p == "delta")
      cfg.interaction.potential.kind = PotentialKind::delta;
    else if (p == "riesz")
      cfg.interaction.potential.kind = PotentialKind::riesz;
    else
      throw std::invalid_argument("config: unknown potential '" + p + "'");
  }
  if (has("interaction.riesz_a"))
    cfg.interaction.potential.riesz_a = to_double(get("interaction.riesz_a"), "riesz_a");

  if (has("initial.rank")) cfg.initial.rank = static_cast<int>(to_int(get("initial.rank"), "rank"));
  if (has("initial.seed")) cfg.initial.seed = static_cast<std::uint64_t>(to_int(get("initial.seed"), "seed"));
  if (has("initial.width_min")) cfg.initial.width_min = to_double(get("initial.width_min"), "width_min");
  if (has("initial.width_max")) cfg.initial.width_max = to_double(get("initial.width_max"), "width_max");
  if (has("initial.center_box")) cfg.initial.center_box = to_double(get("initial.center_box"), "center_box");
  if (has("initial.vmax")) cfg.initial.vmax = to_double(get("initial.vmax"), "vmax");
  if (has("initial.snapshot")) cfg.snapshot_path = get("initial.snapshot");
  if (cfg.initial.rank < 1 || cfg.initial.width_min <= 0.0 ||
      cfg.initial.width_max < cfg.initial.width_min)
    throw std::invalid_argument("config: bad initial data parameters");

  if (has("schedule.t_final")) cfg.schedule.t_final = to_double(get("schedule.t_final"), "t_final");
  if (has("schedule.dt")) cfg.schedule.dt = to_double(get("schedule.dt"), "dt");
  if (has("schedule.record_every"))
    cfg.schedule.record_every = to_double(get("schedule.record_every"), "record_every");
  if (has("schedule.dyadic_snapshots"))
    cfg.schedule.dyadic_snapshots = to_bool(get("schedule.dyadic_snapshots"), "dyadic_snapshots");
  if (has("schedule.boundary_alarm"))
    cfg.schedule.boundary_alarm_threshold = to_double(get("schedule.boundary_alarm"), "boundary_alarm");
  if (cfg.schedule.dt <= 0.0 || cfg.schedule.t_final < 0.0 || cfg.schedule.record_every <= 0.0)
    throw std::invalid_argument("config: bad schedule");

  if (has("suites.inequalities")) cfg.suite_inequalities = to_bool(get("suites.inequalities"), "inequalities");
  if (has("suites.decay")) cfg.suite_decay = to_bool(get("suites.decay"), "decay");
  if (has("suites.scattering")) cfg.suite_scattering = to_bool(get("suites.scattering"), "scattering");
  if (has("suites.apriori")) cfg.suite_apriori = to_bool(get("suites.apriori"), "apriori");

  if (has("run.out_dir")) cfg.out_dir = get("run.out_dir");
  if (has("run.exploratory")) cfg.exploratory = to_bool(get("run.exploratory"), "exploratory");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str());
}

std::uint64_t fnv1a64(const unsigned char* data, std::size_t len) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_of_text(const std::string& text) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(reinterpret_cast<const unsigned char*>(text.data()), text.size())));
  return buf;
}

Snapshot snapshot_of(const FiniteRankOperator& kappa, double time, std::uint64_t seed,
                     const std::string& config_hash) {
  Snapshot s;
  const Grid& g = kappa.grid();
  s.d = g.d;
  s.n = g.n;
  s.half_length = g.half_length;
  s.time = time;
  s.seed = seed;
  s.config_hash = config_hash;
  for (const auto& t : kappa.terms()) {
    if (t.left.v != t.right.v)
      throw std::invalid_argument("snapshot_of: operator is not in projector form");
    s.coeffs.push_back(t.c);
    s.orbitals.push_back(t.left.v);
  }
  return s;
}

FiniteRankOperator operator_of(const Snapshot& snap, const Grid& grid) {
  if (grid.d != snap.d || grid.n != snap.n || grid.half_length != snap.half_length)
    throw std::invalid_argument("operator_of: grid does not match snapshot");
  std::vector<FiniteRankOperator::Term> terms;
  bool real_nonneg = true;
  for (std::size_t i = 0; i < snap.coeffs.size(); ++i) {
    if (snap.coeffs[i].imag() != 0.0 || snap.coeffs[i].real() < 0.0) real_nonneg = false;
    GridFunction phi(grid, snap.orbitals[i]);
    terms.push_back({snap.coeffs[i], phi, phi});
  }
  return FiniteRankOperator(grid, std::move(terms), true, real_nonneg);
}

namespace {

std::vector<unsigned char> payload_bytes(const Snapshot& s) {
  std::vector<unsigned char> out;
  auto put = [&](double v) {
    unsigned char b[8];
    std::memcpy(b, &v, 8);  // little-endian host assumed (x86-64/aarch64)
    out.insert(out.end(), b, b + 8);
  };
  for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
    put(s.coeffs[i].real());
    put(s.coeffs[i].imag());
    for (const cplx& z : s.orbitals[i]) {
      put(z.real());
      put(z.imag());
    }
  }
  return out;
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_snapshot(const std::string& path, const Snapshot& snap) {
  std::vector<unsigned char> payload = payload_bytes(snap);
  std::ostringstream m;
  m << "format_version = " << snap.format_version << "\n";
  m << "d = " << snap.d << "\n";
  m << "n = " << snap.n << "\n";
  m << "L = " << format_g17(snap.half_length) << "\n";
  m << "rank = " << snap.coeffs.size() << "\n";
  m << "time = " << format_g17(snap.time) << "\n";
  m << "seed = " << snap.seed << "\n";
  m << "config_hash = " << snap.config_hash << "\n";
  m << "payload_bytes = " << payload.size() << "\n";
  char cs[32];
  std::snprintf(cs, sizeof cs, "%016llx",
                static_cast<unsigned long long>(fnv1a64(payload.data(), payload.size())));
  m << "checksum = " << cs << "\n";
  m << "---\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
  const std::string head = m.str();
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("write_snapshot: write failed for " + path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line == "---") break;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("read_snapshot: malformed manifest line '" + line + "'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto need = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw std::runtime_error("read_snapshot: missing manifest key " + k);
    return it->second;
  };
  Snapshot s;
  s.format_version = static_cast<int>(to_int(need("format_version"), "format_version"));
  if (s.format_version != 1) throw std::runtime_error("read_snapshot: unsupported format version");
  s.d = static_cast<int>(to_int(need("d"), "d"));
  s.n = static_cast<int>(to_int(need("n"), "n"));
  s.half_length = to_double(need("L"), "L");
  const std::size_t rank = static_cast<std::size_t>(to_int(need("rank"), "rank"));
  s.time = to_double(need("time"), "time");
  s.seed = static_cast<std::uint64_t>(to_int(need("seed"), "seed"));
  s.config_hash = need("config_hash");
  const std::size_t nbytes = static_cast<std::size_t>(to_int(need("payload_bytes"), "payload_bytes"));

  std::size_t npts = 1;
  for (int a = 0; a < s.d; ++a) npts *= static_cast<std::size_t>(s.n);
  if (nbytes != rank * (2 + 2 * npts) * 8)
    throw std::runtime_error("read_snapshot: payload length inconsistent with rank and grid");

  std::vector<unsigned char> payload(nbytes);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(nbytes));
  if (static_cast<std::size_t>(in.gcount()) != nbytes)
    throw std::runtime_error("read_snapshot: truncated payload");
  char cs[32];
  std::snprintf(cs, sizeof cs, "%016llx",
                static_cast<unsigned long long>(fnv1a64(payload.data(), payload.size())));
  if (need("checksum") != cs)
    throw std::runtime_error("read_snapshot: checksum mismatch (expected " + need("checksum") +
                             ", computed " + cs + ")");

  std::size_t off = 0;
  auto take = [&] {
    double v;
    std::memcpy(&v, payload.data() + off, 8);
    off += 8;
    return v;
  };
  for (std::size_t i = 0; i < rank; ++i) {
    double cr = take(), ci = take();
    s.coeffs.push_back(cplx{cr, ci});
    std::vector<cplx> orb(npts);
    for (std::size_t k = 0; k < npts; ++k) {
      double re = take(), im = take();
      orb[k] = cplx{re, im};
    }
    s.orbitals.push_back(std::move(orb));
  }
  return s;
}

void write_series_csv(const std::string& path, const NormSeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_series_csv: cannot open " + path);
  out << "t,trace,energy,hs_norm,W1,W2,L2r_Linf_c,gamma_inf,boundary_mass,scat_residual,"
         "commut_residual\n";
  for (const auto& r : series.rows) {
    out << format_g17(r.t) << ',' << format_g17(r.trace) << ',' << format_g17(r.energy) << ','
        << format_g17(r.hs) << ',' << format_g17(r.w1) << ',' << format_g17(r.w2) << ','
        << format_g17(r.l2r_linf_c) << ',' << format_g17(r.gamma_inf) << ','
        << format_g17(r.boundary_mass) << ',' << format_g17(r.scat_residual) << ','
        << format_g17(r.commut_residual) << "\n";
  }
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("read_csv: cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("read_csv: empty file " + path);
  std::istringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.columns.push_back(trim(cell));
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream rs(line);
    std::vector<double> row;
    while (std::getline(rs, cell, ',')) row.push_back(to_double(trim(cell), "csv cell"));
    if (row.size() != t.columns.size())
      throw std::invalid_argument("read_csv: ragged row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace ksflow
