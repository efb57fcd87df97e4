#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "prb/linopt.hpp"

namespace prb {

using json = nlohmann::json;

// One JSON object per line; doubles written with 17 significant digits.
std::string record_to_json(const ExperimentRecord& r);
ExperimentRecord record_from_json(const std::string& line);

void write_records(std::ostream& os, const std::vector<ExperimentRecord>& recs);
// Data error on malformed lines, reported with the line number.
std::vector<ExperimentRecord> read_records(std::istream& is);
std::vector<ExperimentRecord> read_records_file(const std::string& path);

SimConfig config_from_json(const json& j);
json config_to_json(const SimConfig& c);
SimConfig load_config(const std::string& path);

// Heterodyne shot: the outcome is a point of C^m.
struct HetRecord {
  int seq_len = 0;
  CMatrix product;
  std::vector<cplx> alpha;
};

std::string het_record_to_json(const HetRecord& r);
HetRecord het_record_from_json(const std::string& line);

// Row-major, re/im interleaved.
std::vector<double> flatten(const CMatrix& U);
CMatrix unflatten(const std::vector<double>& v, int m);

}  // namespace prb
