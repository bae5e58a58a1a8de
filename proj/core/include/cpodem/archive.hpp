#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cpodem/cpod.hpp"
#include "cpodem/emulator.hpp"

namespace cpodem {

/// Model archive layout:
///
///   manifest.json              format version, config, design space, cases,
///                              partitions, scalar GP hyperparameters, warnings
///   tree.json                  present iff the model is partitioned
///   <partition>/common_grid.bin
///   <partition>/maps.json      common and per-case region boxes
///   <partition>/basis_<var>.bin  "CPB1" u32 K, u32 nodes, mean, modes (mode-major),
///                                eigenvalues, quadrature
///   <partition>/coeffs_<var>.bin "CPC1" u32 K, u32 n, u32 T, beta[k][i][t]
///   <partition>/gp_<var>.bin     "CPK1" u32 K, u32 T, u32 p, then per (k, t):
///                                mu, sigma2, eta[p], nugget
///
/// Every file is written in a fixed order with fixed formatting, so retraining
/// the same corpus with the same seed reproduces the archive byte for byte.
/// GPs are rebuilt on load from their hyperparameters and training data.
void save_model(const EmulatorModel& model, const std::filesystem::path& dir);
EmulatorModel load_model(const std::filesystem::path& dir);

/// FNV-1a over every archive file (sorted by relative path), as 16 hex digits.
std::string model_hash(const std::filesystem::path& dir);

void write_basis(const std::filesystem::path& file, const CPODBasis& basis);
CPODBasis read_basis(const std::filesystem::path& file);

void write_coefficients(const std::filesystem::path& file, const CoeffTable& table);
CoeffTable read_coefficients(const std::filesystem::path& file);

std::string config_to_json(const EmulatorConfig& config);
/// Keys absent from `text` keep their defaults. Throws InvalidArgument on bad values.
EmulatorConfig config_from_json(std::string_view text);

}  // namespace cpodem
