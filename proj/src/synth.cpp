#include "surrogate/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>

#include "surrogate/errors.hpp"

namespace surrogate {

namespace {

using nlohmann::json;

constexpr int kDatasetVersion = 1;

const std::array<ElementType, 3> kElements{{
    {"H", {1.0}, {0.5}},
    {"C", {0.5, 2.0}, {0.3, 0.1}},
    {"O", {0.4, 1.5, 6.0}, {0.25, 0.15, 0.05}},
}};

std::vector<std::size_t> sample_composition(std::size_t dim, Rng& rng) {
  std::vector<std::size_t> atoms;
  std::size_t remaining = dim;
  while (remaining > 0) {
    std::vector<std::size_t> fitting;
    for (std::size_t e = 0; e < kElements.size(); ++e) {
      if (kElements[e].exponents.size() <= remaining) fitting.push_back(e);
    }
    std::uniform_int_distribution<std::size_t> pick(0, fitting.size() - 1);
    const std::size_t e = fitting[pick(rng)];
    atoms.push_back(e);
    remaining -= kElements[e].exponents.size();
  }
  return atoms;
}

// Rejection sampling with a minimum interatomic distance; the box grows if
// the atoms do not fit.
std::vector<Point3> sample_positions(std::size_t n_atoms, Rng& rng) {
  constexpr double kMinDistance = 1.4;
  double box = 2.0 * std::cbrt(static_cast<double>(n_atoms)) + 2.0;
  std::vector<Point3> positions;
  int failures = 0;
  while (positions.size() < n_atoms) {
    std::uniform_real_distribution<double> coord(0.0, box);
    const Point3 candidate(coord(rng), coord(rng), coord(rng));
    const bool clear = std::all_of(positions.begin(), positions.end(), [&](const Point3& q) {
      return (q - candidate).norm() >= kMinDistance;
    });
    if (clear) {
      positions.push_back(candidate);
      failures = 0;
    } else if (++failures > 200) {
      box *= 1.2;
      failures = 0;
    }
  }
  return positions;
}

Vector molecule_features(const std::vector<std::size_t>& elements,
                         const std::vector<Point3>& positions) {
  Vector f = Vector::Zero(static_cast<Eigen::Index>(kFeatureDim));
  for (const auto e : elements) f[static_cast<Eigen::Index>(e)] += 0.25;
  const auto n_atoms = static_cast<double>(elements.size());
  f[3] = n_atoms / 8.0;

  std::vector<double> distances;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) distances.push_back((positions[i] - positions[j]).norm());
  }
  if (!distances.empty()) {
    const auto [lo, hi] = std::minmax_element(distances.begin(), distances.end());
    double mean = 0.0;
    for (const double d : distances) mean += d;
    mean /= static_cast<double>(distances.size());
    double var = 0.0;
    for (const double d : distances) var += (d - mean) * (d - mean);
    var /= static_cast<double>(distances.size());
    f[4] = *lo / 5.0;
    f[5] = mean / 5.0;
    f[6] = *hi / 5.0;
    f[7] = std::sqrt(var) / 5.0;
    // Gaussian-smeared radial histogram, bins centered at 1..8 bohr.
    for (int bin = 0; bin < 8; ++bin) {
      double acc = 0.0;
      for (const double d : distances) {
        const double x = (d - (bin + 1.0)) / 0.5;
        acc += std::exp(-0.5 * x * x);
      }
      f[8 + bin] = acc / n_atoms;
    }
  }
  return f;
}

// H = h * (S + L L^T + sigma I), with sigma chosen so cond(H) <= cap and the
// scale h so that the largest eigenvalue equals `max_eigenvalue`.
Matrix sample_hessian(const Matrix& overlap, const GeneratorOptions& opt, Rng& rng) {
  const Eigen::Index n = overlap.rows();
  const Eigen::Index rank = std::max<Eigen::Index>(1, n / 4);
  std::normal_distribution<double> normal(0.0, 0.5 / std::sqrt(static_cast<double>(rank)));
  Matrix low_rank(n, rank);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < rank; ++k) low_rank(i, k) = normal(rng);
  }
  Matrix m = overlap + low_rank * low_rank.transpose();
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  // Aim slightly inside the cap so rounding cannot push the ratio over it.
  const double target = 1.0 + (opt.condition_cap - 1.0) * (1.0 - 1e-6);
  const double shift = std::max(0.0, (hi - target * lo) / (target - 1.0));
  m.diagonal().array() += shift;
  return (opt.hessian_max_eigenvalue / (hi + shift)) * m;
}

json vector_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::span<const ElementType> element_table() { return kElements; }

Coefficients dsad_from_blocks(std::span<const std::vector<double>> blocks) {
  std::vector<double> flat;
  for (const auto& block : blocks) flat.insert(flat.end(), block.begin(), block.end());
  return Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

void Molecule::validate() const {
  const auto n = static_cast<Eigen::Index>(basis.size());
  require(n >= 1, "molecule " + id + ": empty basis");
  require(ground_state.size() == n && dsad.size() == n,
          "molecule " + id + ": coefficient dimension does not match basis");
  require(ground_state.allFinite() && dsad.allFinite() && features.allFinite(),
          "molecule " + id + ": non-finite coefficients or features");
  require(reference.hessian.rows() == n && reference.hessian.cols() == n,
          "molecule " + id + ": Hessian dimension does not match basis");
  require(std::isfinite(reference.quartic) && reference.quartic >= 0.0,
          "molecule " + id + ": quartic weight must be nonnegative");
  Eigen::LLT<Matrix> llt(reference.hessian);
  require(llt.info() == Eigen::Success, "molecule " + id + ": Hessian is not positive definite");
}

const Molecule& Dataset::find(const std::string& id) const {
  for (const auto& m : molecules) {
    if (m.id == id) return m;
  }
  throw ContractViolation("no molecule with id '" + id + "'");
}

void Dataset::validate() const {
  require(duplication >= 1, "dataset duplication must be at least 1");
  std::set<std::string> ids;
  for (const auto& m : molecules) {
    m.validate();
    require(ids.insert(m.id).second, "duplicate molecule id '" + m.id + "'");
    require(m.dim() == dim() && static_cast<std::size_t>(m.features.size()) == feature_dim(),
            "molecule " + m.id + ": dimensions differ from the rest of the dataset");
  }
}

Vector random_unit_vector(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector u(static_cast<Eigen::Index>(dim));
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = normal(rng);
    norm = u.norm();
  } while (norm == 0.0);
  return u / norm;
}

Dataset generate_dataset(std::size_t n_molecules, std::size_t dim, std::uint64_t seed,
                         const GeneratorOptions& options) {
  require(n_molecules >= 1, "generate_dataset: need at least one molecule");
  require(dim >= 2, "generate_dataset: coefficient dimension must be at least 2");
  require(options.condition_cap > 1.0, "generate_dataset: condition cap must exceed 1");

  Rng rng(seed);
  Dataset data;
  data.seed = seed;
  data.molecules.reserve(n_molecules);
  for (std::size_t m = 0; m < n_molecules; ++m) {
    std::vector<std::size_t> elements;
    std::vector<Point3> positions;
    if (options.isolated_atoms) {
      elements.assign(dim, 0);
      std::uniform_real_distribution<double> jitter(0.0, 5.0);
      for (std::size_t a = 0; a < dim; ++a) {
        positions.emplace_back(60.0 * static_cast<double>(a) + jitter(rng), jitter(rng), jitter(rng));
      }
    } else {
      elements = sample_composition(dim, rng);
      positions = sample_positions(elements.size(), rng);
    }

    std::vector<Point3> centers;
    std::vector<double> exponents;
    std::vector<std::vector<double>> blocks;
    for (std::size_t a = 0; a < elements.size(); ++a) {
      const auto& el = kElements[elements[a]];
      for (const double alpha : el.exponents) {
        centers.push_back(positions[a]);
        exponents.push_back(alpha);
      }
      blocks.push_back(el.dsad_block);
    }

    Molecule mol;
    mol.id = "id" + std::to_string(m);
    mol.basis = BasisSet(std::move(centers), std::move(exponents));
    mol.features = molecule_features(elements, positions);
    mol.dsad = dsad_from_blocks(blocks);

    const Matrix overlap = overlap_matrix(mol.basis).matrix();
    mol.reference.hessian = sample_hessian(overlap, options, rng);
    std::uniform_real_distribution<double> quartic(0.0, options.quartic_max);
    mol.reference.quartic = options.quartic_max > 0.0 ? quartic(rng) : 0.0;

    std::uniform_real_distribution<double> radius(options.offset_min, options.offset_max);
    const double r = radius(rng);
    mol.ground_state = mol.dsad + r * random_unit_vector(dim, rng);
    data.molecules.push_back(std::move(mol));
  }
  return data;
}

EnergyGradient reference_energy_grad(const Molecule& mol, const Coefficients& p) {
  require(p.size() == mol.ground_state.size(), "reference_energy_grad: dimension mismatch");
  const Vector d = p - mol.ground_state;
  const Vector hd = mol.reference.hessian * d;
  const double c = mol.reference.quartic;
  EnergyGradient out;
  out.energy = 0.5 * d.dot(hd) + c * d.array().pow(4).sum();
  out.gradient = hd + (4.0 * c) * d.array().cube().matrix();
  return out;
}

const Coefficients& dsad_coefficients(const Molecule& mol) { return mol.dsad; }

void write_dataset_json(std::ostream& out, const Dataset& dataset) {
  json root;
  root["version"] = kDatasetVersion;
  root["seed"] = dataset.seed;
  json mols = json::array();
  for (const auto& m : dataset.molecules) {
    json jm;
    jm["id"] = m.id;
    json centers = json::array();
    for (const auto& c : m.basis.centers()) centers.push_back({c.x(), c.y(), c.z()});
    jm["centers"] = std::move(centers);
    jm["exponents"] = m.basis.exponents();
    jm["features"] = vector_to_json(m.features);
    jm["ground_state"] = vector_to_json(m.ground_state);
    jm["dsad"] = vector_to_json(m.dsad);
    json h = json::array();
    for (Eigen::Index i = 0; i < m.reference.hessian.rows(); ++i) {
      h.push_back(vector_to_json(m.reference.hessian.row(i).transpose()));
    }
    jm["H"] = std::move(h);
    jm["c"] = m.reference.quartic;
    mols.push_back(std::move(jm));
  }
  root["molecules"] = std::move(mols);
  out << root.dump() << '\n';
}

Dataset read_dataset_json(std::istream& in) {
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("dataset is not valid JSON: ") + e.what());
  }
  Dataset data;
  try {
    require(root.at("version").get<int>() == kDatasetVersion, "unsupported dataset version");
    data.seed = root.at("seed").get<std::uint64_t>();
    for (const auto& jm : root.at("molecules")) {
      Molecule m;
      m.id = jm.at("id").get<std::string>();
      std::vector<Point3> centers;
      for (const auto& c : jm.at("centers")) {
        const auto xyz = c.get<std::vector<double>>();
        require(xyz.size() == 3, "molecule " + m.id + ": centers must be 3-vectors");
        centers.emplace_back(xyz[0], xyz[1], xyz[2]);
      }
      m.basis = BasisSet(std::move(centers), jm.at("exponents").get<std::vector<double>>());
      m.features = vector_from_json(jm.at("features"));
      m.ground_state = vector_from_json(jm.at("ground_state"));
      m.dsad = vector_from_json(jm.at("dsad"));
      const auto& jh = jm.at("H");
      const auto n = static_cast<Eigen::Index>(jh.size());
      m.reference.hessian.resize(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Vector row = vector_from_json(jh.at(static_cast<std::size_t>(i)));
        require(row.size() == n, "molecule " + m.id + ": H must be square");
        m.reference.hessian.row(i) = row.transpose();
      }
      m.reference.quartic = jm.at("c").get<double>();
      data.molecules.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("malformed dataset: ") + e.what());
  }
  data.validate();
  return data;
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw ContractViolation("cannot open '" + path + "' for writing");
  write_dataset_json(out, dataset);
  if (!out) throw ContractViolation("failed writing '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open dataset '" + path + "'");
  return read_dataset_json(in);
}

}  // namespace surrogate
