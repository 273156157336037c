#include "longic/model_io.hpp"

#include "longic/error.hpp"

#include <fstream>

namespace longic {

namespace {

using nlohmann::json;

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Matrix matrix_from(const json& j, Eigen::Index cols) {
  Matrix M(static_cast<Eigen::Index>(j.size()), cols);
  Eigen::Index r = 0;
  for (const auto& row : j) {
    const auto values = row.get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != cols) {
      throw DataError("model file: matrix row has the wrong width");
    }
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = values[static_cast<std::size_t>(c)];
    ++r;
  }
  return M;
}

std::vector<TreeNode> nodes_from(const json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& n : j) {
    nodes.push_back(TreeNode{n.at("feature").get<int>(), n.at("threshold").get<double>(),
                             n.at("left").get<int>(), n.at("right").get<int>(),
                             n.at("value").get<double>()});
  }
  return nodes;
}

void check_header(const json& j, std::string_view task) {
  if (!j.is_object()) throw DataError("model file: expected an object");
  if (j.value("format_version", -1) != kModelFormatVersion) {
    throw DataError("model file: unsupported format_version");
  }
  if (!task.empty() && j.value("task", std::string{}) != task) {
    throw DataError("model file: expected a " + std::string(task) + " model");
  }
}

Kernel kernel_from(const json& j) {
  Kernel k;
  k.kind = parse_kernel_kind(j.at("type").get<std::string>());
  k.gamma = j.at("gamma").get<double>();
  return k;
}

}  // namespace

json standardizer_to_json(const Standardizer& s) {
  return {{"mean", to_std(s.mean())}, {"scale", to_std(s.scale())}};
}

Standardizer standardizer_from_json(const json& j) {
  return Standardizer(vector_from(j.at("mean")), vector_from(j.at("scale")));
}

ClassifierPtr classifier_from_json(const json& j) {
  try {
    check_header(j, "classification");
    auto s = standardizer_from_json(j.at("standardizer"));
    const auto dim = s.dim();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "rbf_svm" || kind == "linear_svm") {
      const auto& p = j.at("platt");
      return std::make_shared<SvmClassifier>(
          std::move(s), kernel_from(j.at("kernel")), matrix_from(j.at("support"), dim),
          vector_from(j.at("coef")), j.at("rho").get<double>(),
          PlattParams{p.at("a").get<double>(), p.at("b").get<double>()});
    }
    if (kind == "logistic") {
      return std::make_shared<LogisticClassifier>(std::move(s), vector_from(j.at("weights")),
                                                  j.at("bias").get<double>());
    }
    if (kind == "knn") {
      return std::make_shared<KnnClassifier>(std::move(s), matrix_from(j.at("points"), dim),
                                             vector_from(j.at("labels")), j.at("k").get<int>());
    }
    if (kind == "cart") {
      return std::make_shared<CartClassifier>(std::move(s), nodes_from(j.at("nodes")));
    }
    if (kind == "constant") {
      return std::make_shared<ConstantClassifier>(dim, j.at("probability").get<double>());
    }
    throw DataError("model file: unknown classifier kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

RegressorPtr regressor_from_json(const json& j) {
  try {
    check_header(j, "regression");
    auto s = standardizer_from_json(j.at("standardizer"));
    const auto dim = s.dim();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "rbf_svm" || kind == "linear_svm") {
      return std::make_shared<SvmRegressor>(
          std::move(s), kernel_from(j.at("kernel")), matrix_from(j.at("support"), dim),
          vector_from(j.at("coef")), j.at("rho").get<double>(), j.at("target_mean").get<double>(),
          j.at("target_scale").get<double>());
    }
    if (kind == "ridge") {
      return std::make_shared<RidgeRegressor>(std::move(s), vector_from(j.at("weights")),
                                              j.at("intercept").get<double>());
    }
    if (kind == "knn") {
      return std::make_shared<KnnRegressor>(std::move(s), matrix_from(j.at("points"), dim),
                                            vector_from(j.at("targets")), j.at("k").get<int>());
    }
    if (kind == "cart") {
      return std::make_shared<CartRegressor>(std::move(s), nodes_from(j.at("nodes")));
    }
    if (kind == "constant") {
      return std::make_shared<ConstantRegressor>(dim, j.at("value").get<double>());
    }
    throw DataError("model file: unknown regressor kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

IndirectEstimator indirect_from_json(const json& j) {
  try {
    check_header(j, "");
    if (j.at("kind").get<std::string>() != "nw_kernel") {
      throw DataError("model file: expected an nw_kernel estimator");
    }
    auto s = standardizer_from_json(j.at("standardizer"));
    const auto dim = s.dim();
    const auto& targets = j.at("targets");
    const Eigen::Index out_dim =
        targets.empty() ? 0 : static_cast<Eigen::Index>(targets.front().size());
    return IndirectEstimator(std::move(s), matrix_from(j.at("inputs"), dim),
                             matrix_from(targets, out_dim), j.at("context_dim").get<Eigen::Index>(),
                             j.at("bandwidth").get<double>());
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

void save_json(const json& j, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + file.string());
}

json load_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

}  // namespace longic
