#include "cloudlead/tcn_io.hpp"

#include <json.hpp>

#include "cloudlead/io.hpp"

namespace cloudlead::tcn {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;
}

void save_model(const TcnModel& model, const std::filesystem::path& path) {
  json cfg{{"kernel_size", model.config.kernel_size},
           {"dilations", model.config.dilations},
           {"n_stacks", model.config.n_stacks},
           {"n_filters", model.config.n_filters},
           {"in_channels", model.config.in_channels},
           {"out_dim", model.config.out_dim},
           {"use_residual", model.config.use_residual},
           {"use_skip", model.config.use_skip},
           {"seq2seq", model.config.seq2seq},
           {"seed", model.config.seed}};
  json tensors = json::object();
  for (std::size_t t = 0; t < model.tensors().size(); ++t) {
    const auto& spec = model.tensors()[t];
    const auto m = model.view(static_cast<int>(t));
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    tensors[spec.name] = std::move(rows);
  }
  json doc{{"format_version", kFormatVersion}, {"config", cfg}, {"parameters", tensors}};
  write_text_atomic(path, doc.dump() + "\n");
}

TcnModel load_model(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError("model checkpoint: " + std::string(e.what()));
  }
  if (doc.value("format_version", -1) != kFormatVersion)
    throw DataError("unsupported model format_version");
  const json& cfg = doc.at("config");
  TcnConfig c;
  c.kernel_size = cfg.at("kernel_size").get<int>();
  c.dilations = cfg.at("dilations").get<std::vector<int>>();
  c.n_stacks = cfg.at("n_stacks").get<int>();
  c.n_filters = cfg.at("n_filters").get<int>();
  c.in_channels = cfg.at("in_channels").get<int>();
  c.out_dim = cfg.at("out_dim").get<int>();
  c.use_residual = cfg.at("use_residual").get<bool>();
  c.use_skip = cfg.at("use_skip").get<bool>();
  c.seq2seq = cfg.at("seq2seq").get<bool>();
  c.seed = cfg.at("seed").get<std::uint64_t>();

  TcnModel model(c);
  const json& tensors = doc.at("parameters");
  for (std::size_t t = 0; t < model.tensors().size(); ++t) {
    const auto& spec = model.tensors()[t];
    if (!tensors.contains(spec.name))
      throw DataError("checkpoint missing tensor '" + spec.name + "'");
    const json& rows = tensors[spec.name];
    if (static_cast<Eigen::Index>(rows.size()) != spec.rows)
      throw DataError("tensor '" + spec.name + "' row count mismatch");
    auto m = model.view(static_cast<int>(t));
    for (Eigen::Index r = 0; r < spec.rows; ++r) {
      const json& row = rows[static_cast<std::size_t>(r)];
      if (static_cast<Eigen::Index>(row.size()) != spec.cols)
        throw DataError("tensor '" + spec.name + "' column count mismatch");
      for (Eigen::Index cix = 0; cix < spec.cols; ++cix)
        m(r, cix) = row[static_cast<std::size_t>(cix)].get<double>();
    }
  }
  return model;
}

std::string train_log_csv(const TrainResult& result, bool with_timings) {
  std::string csv = "epoch,train_loss,val_loss,wall_seconds\n";
  for (const auto& e : result.curve) {
    csv += std::to_string(e.epoch);
    csv += ',';
    csv += format_double(e.train_loss);
    csv += ',';
    csv += format_double(e.val_loss);
    csv += ',';
    csv += format_double(with_timings ? e.wall_seconds : 0.0);
    csv += '\n';
  }
  return csv;
}

}  // namespace cloudlead::tcn
