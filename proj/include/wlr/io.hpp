#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "wlr/linalg.hpp"

namespace wlr::io {

/// Provenance written as a leading `# key=value ...` line. Readers skip
/// lines starting with '#'.
struct Provenance {
  std::string scenario;
  std::string seed;  // one seed, or a comma list for a sweep
  std::string config_hash;
};

void write_provenance(std::ostream& out, const Provenance& p);

void write_dense_csv(std::ostream& out, const DenseMatrix& a);
DenseMatrix read_dense_csv(std::istream& in);

void write_matrix_market(std::ostream& out, const SparseObservation& obs);
SparseObservation read_matrix_market(std::istream& in);

DenseMatrix load_dense_csv(const std::filesystem::path& path);
SparseObservation load_matrix_market(const std::filesystem::path& path);

/// Opens `path` for writing (creating parent directories) or raises an
/// io error.
std::ofstream open_output(const std::filesystem::path& path);

/// Plain `key = value` lines; '#' starts a comment. Later keys win.
std::map<std::string, std::string> parse_key_value(std::istream& in);
std::map<std::string, std::string> load_key_value(const std::filesystem::path& path);

/// 64-bit FNV-1a over the canonical `key=value\n` rendering of a sorted map,
/// as 16 lowercase hex digits.
std::string config_hash(const std::map<std::string, std::string>& config);

}  // namespace wlr::io
