#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "surrogate/basis.hpp"

namespace surrogate {

using Rng = std::mt19937_64;

/// Parameters of the known reference functional
///   E(p) = 1/2 (p - p*)^T H (p - p*) + c * sum_i (p - p*)_i^4.
struct ReferenceParams {
  Matrix hessian;
  double quartic = 0.0;
};

struct Molecule {
  std::string id;
  BasisSet basis;
  Vector features;
  Coefficients ground_state;  // p*
  Coefficients dsad;          // p-bar, initial guess and parabola center
  ReferenceParams reference;

  std::size_t dim() const { return basis.size(); }
  /// Checks dimensions, finiteness and positive definiteness of H.
  void validate() const;
};

struct Dataset {
  std::uint64_t seed = 0;
  std::vector<Molecule> molecules;
  std::size_t duplication = 21;

  std::size_t dim() const { return molecules.empty() ? 0 : molecules.front().dim(); }
  std::size_t feature_dim() const {
    return molecules.empty() ? 0 : static_cast<std::size_t>(molecules.front().features.size());
  }
  const Molecule& find(const std::string& id) const;
  void validate() const;
};

/// A fixed element type: one block of basis exponents and the matching
/// block of atomic-density coefficients.
struct ElementType {
  std::string symbol;
  std::vector<double> exponents;
  std::vector<double> dsad_block;
};

/// The element table used by the generator.
std::span<const ElementType> element_table();

/// Concatenation of the per-atom dSAD blocks.
Coefficients dsad_from_blocks(std::span<const std::vector<double>> blocks);

struct GeneratorOptions {
  double quartic_max = 0.2;
  double condition_cap = 50.0;
  double hessian_max_eigenvalue = 12.0;
  double offset_min = 0.02;  // ||p* - p-bar|| is uniform on [offset_min, offset_max]
  double offset_max = 0.08;
  /// Single-function atoms at least 60 bohr apart: the overlap matrix is then
  /// exactly the identity in double precision.
  bool isolated_atoms = false;
};

/// Length of the per-molecule descriptor produced by the generator.
inline constexpr std::size_t kFeatureDim = 16;

Dataset generate_dataset(std::size_t n_molecules, std::size_t dim, std::uint64_t seed,
                         const GeneratorOptions& options = {});

struct EnergyGradient {
  double energy = 0.0;
  Vector gradient;
};

EnergyGradient reference_energy_grad(const Molecule& mol, const Coefficients& p);

const Coefficients& dsad_coefficients(const Molecule& mol);

/// Uniformly distributed direction on the unit sphere in R^dim.
Vector random_unit_vector(std::size_t dim, Rng& rng);

void write_dataset_json(std::ostream& out, const Dataset& dataset);
Dataset read_dataset_json(std::istream& in);
void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);

}  // namespace surrogate
