#include "prb/records.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "prb/errors.hpp"

namespace prb {

namespace {

void put_double(std::string& s, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  s += buf;
}

void put_doubles(std::string& s, const std::vector<double>& v) {
  s += '[';
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    put_double(s, v[i]);
  }
  s += ']';
}

int infer_m(size_t flat_len) {
  const int m = static_cast<int>(std::lround(std::sqrt(flat_len / 2.0)));
  if (m < 1 || static_cast<size_t>(2 * m * m) != flat_len) fail(ErrorKind::Data, "product length is not 2 m^2");
  return m;
}

}  // namespace

std::vector<double> flatten(const CMatrix& U) {
  std::vector<double> v;
  v.reserve(static_cast<size_t>(2 * U.size()));
  for (int i = 0; i < U.rows(); ++i)
    for (int j = 0; j < U.cols(); ++j) {
      v.push_back(U(i, j).real());
      v.push_back(U(i, j).imag());
    }
  return v;
}

CMatrix unflatten(const std::vector<double>& v, int m) {
  if (v.size() != static_cast<size_t>(2 * m * m)) fail(ErrorKind::Data, "matrix length is not 2 m^2");
  CMatrix U(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) U(i, j) = cplx(v[2 * (i * m + j)], v[2 * (i * m + j) + 1]);
  return U;
}

std::string record_to_json(const ExperimentRecord& r) {
  std::string s = "{\"seq_len\":" + std::to_string(r.seq_len) + ",\"product\":";
  put_doubles(s, flatten(r.product));
  s += ",\"outcome\":[";
  for (size_t i = 0; i < r.outcome.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(r.outcome[i]);
  }
  s += "],\"survived\":";
  s += r.survived ? "true" : "false";
  if (!r.factors.empty()) {
    s += ",\"factors\":[";
    for (size_t f = 0; f < r.factors.size(); ++f) {
      if (f) s += ',';
      put_doubles(s, flatten(r.factors[f]));
    }
    s += ']';
  }
  s += '}';
  return s;
}

ExperimentRecord record_from_json(const std::string& line) {
  ExperimentRecord r;
  try {
    const json j = json::parse(line);
    r.seq_len = j.at("seq_len").get<int>();
    const auto flat = j.at("product").get<std::vector<double>>();
    const int m = infer_m(flat.size());
    r.product = unflatten(flat, m);
    r.outcome = j.at("outcome").get<FockVector>();
    if (static_cast<int>(r.outcome.size()) != m) fail(ErrorKind::Data, "outcome length differs from m");
    r.survived = j.at("survived").get<bool>();
    if (j.contains("factors"))
      for (const auto& f : j["factors"]) r.factors.push_back(unflatten(f.get<std::vector<double>>(), m));
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed record: ") + e.what());
  }
  if (r.seq_len < 1) fail(ErrorKind::Data, "seq_len must be positive");
  if (!r.factors.empty()) {
    if (static_cast<int>(r.factors.size()) != r.seq_len) fail(ErrorKind::Data, "factor count differs from seq_len");
    CMatrix P = r.factors[0];
    for (size_t i = 1; i < r.factors.size(); ++i) P = r.factors[i] * P;
    if ((P - r.product).cwiseAbs().maxCoeff() > 1e-9) fail(ErrorKind::Data, "product differs from composed factors");
  }
  return r;
}

void write_records(std::ostream& os, const std::vector<ExperimentRecord>& recs) {
  for (const auto& r : recs) os << record_to_json(r) << '\n';
}

std::vector<ExperimentRecord> read_records(std::istream& is) {
  std::vector<ExperimentRecord> out;
  std::string line;
  long no = 0;
  while (std::getline(is, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const Error& e) {
      fail(ErrorKind::Data, "line " + std::to_string(no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ExperimentRecord> read_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Data, "cannot open records file " + path);
  return read_records(in);
}

SimConfig config_from_json(const json& j) {
  SimConfig c;
  try {
    c.n = j.at("n").get<int>();
    c.m = j.at("m").get<int>();
    if (j.contains("input")) {
      c.input = j["input"].get<FockVector>();
    } else {
      if (c.n > c.m) fail(ErrorKind::Config, "default collision-free input needs n <= m");
      c.input.assign(c.m, 0);
      for (int i = 0; i < c.n && i < c.m; ++i) c.input[i] = 1;
    }
    c.lengths = j.at("lengths").get<std::vector<int>>();
    c.shots = j.at("shots").get<long>();
    c.seed = j.value("seed", uint64_t{1});
    const std::string measure = j.value("measure", std::string("haar"));
    if (measure == "haar")
      c.measure = Measure::Haar;
    else if (measure == "composite-local")
      c.measure = Measure::CompositeLocal;
    else if (measure == "identity")
      c.measure = Measure::Identity;
    else
      fail(ErrorKind::Config, "unknown measure " + measure);
    c.store_factors = j.value("store_factors", false);
    if (j.contains("loss")) {
      const auto& L = j["loss"];
      const std::string kind = L.value("kind", std::string("none"));
      if (kind == "none")
        c.loss.kind = LossModel::Kind::None;
      else if (kind == "uniform")
        c.loss.kind = LossModel::Kind::Uniform;
      else if (kind == "gate-random")
        c.loss.kind = LossModel::Kind::GateRandom;
      else
        fail(ErrorKind::Config, "unknown loss kind " + kind);
      c.loss.sqrt_p = L.value("sqrt_p", 1.0);
      if (L.contains("range")) {
        const auto r = L["range"].get<std::vector<double>>();
        if (r.size() != 2) fail(ErrorKind::Config, "loss range needs two entries");
        c.loss.range_lo = r[0];
        c.loss.range_hi = r[1];
      }
      c.loss.sqrt_p_sp = L.value("sqrt_p_sp", 1.0);
      c.loss.sqrt_p_m = L.value("sqrt_p_m", 1.0);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const SimConfig& c) {
  json j;
  j["n"] = c.n;
  j["m"] = c.m;
  j["input"] = c.input;
  j["lengths"] = c.lengths;
  j["shots"] = c.shots;
  j["seed"] = c.seed;
  j["measure"] = c.measure == Measure::Haar ? "haar" : c.measure == Measure::CompositeLocal ? "composite-local" : "identity";
  j["store_factors"] = c.store_factors;
  json L;
  switch (c.loss.kind) {
    case LossModel::Kind::None:
      L["kind"] = "none";
      break;
    case LossModel::Kind::Uniform:
      L["kind"] = "uniform";
      L["sqrt_p"] = c.loss.sqrt_p;
      break;
    case LossModel::Kind::GateRandom:
      L["kind"] = "gate-random";
      L["range"] = {c.loss.range_lo, c.loss.range_hi};
      break;
  }
  L["sqrt_p_sp"] = c.loss.sqrt_p_sp;
  L["sqrt_p_m"] = c.loss.sqrt_p_m;
  j["loss"] = L;
  return j;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string het_record_to_json(const HetRecord& r) {
  std::string s = "{\"seq_len\":" + std::to_string(r.seq_len) + ",\"product\":";
  put_doubles(s, flatten(r.product));
  std::vector<double> a;
  for (const auto& z : r.alpha) {
    a.push_back(z.real());
    a.push_back(z.imag());
  }
  s += ",\"alpha\":";
  put_doubles(s, a);
  s += '}';
  return s;
}

HetRecord het_record_from_json(const std::string& line) {
  HetRecord r;
  try {
    const json j = json::parse(line);
    r.seq_len = j.at("seq_len").get<int>();
    const auto flat = j.at("product").get<std::vector<double>>();
    const int m = infer_m(flat.size());
    r.product = unflatten(flat, m);
    const auto a = j.at("alpha").get<std::vector<double>>();
    if (a.size() != static_cast<size_t>(2 * m)) fail(ErrorKind::Data, "alpha length is not 2 m");
    for (int i = 0; i < m; ++i) r.alpha.emplace_back(a[2 * i], a[2 * i + 1]);
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed heterodyne record: ") + e.what());
  }
  return r;
}

}  // namespace prb
