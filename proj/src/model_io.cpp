#include "polyfactor/model_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace polyfactor {

namespace {

void write_matrix(std::ostream& out, const Eigen::MatrixXd& M) {
  out << '[';
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    out << (r ? ",\n    [" : "\n    [");
    for (Eigen::Index c = 0; c < M.cols(); ++c) out << (c ? "," : "") << format_double(M(r, c));
    out << ']';
  }
  out << (M.rows() ? "\n  ]" : "]");
}

Eigen::MatrixXd read_matrix(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw std::runtime_error(std::string("model field ") + name + " has the wrong number of rows");
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw std::runtime_error(std::string("model field ") + name + " has a row of the wrong length");
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return M;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void save_model(std::ostream& out, const Model& model) {
  out << "{\n";
  out << "  \"kind\": \"" << to_string(model.kind) << "\",\n";
  out << "  \"loss\": \"" << to_string(model.loss) << "\",\n";
  out << "  \"penalty\": \"" << to_string(model.penalty) << "\",\n";
  out << "  \"lambda\": " << format_double(model.lambda) << ",\n";
  out << "  \"d\": " << model.d() << ",\n";
  out << "  \"m\": " << model.m() << ",\n";
  out << "  \"k\": " << model.k() << ",\n";
  out << "  \"label_map\": [";
  for (std::size_t i = 0; i < model.label_map.size(); ++i) out << (i ? ", " : "") << format_double(model.label_map[i]);
  out << "],\n";
  out << "  \"bias_augmented\": " << (model.bias_augmented ? "true" : "false") << ",\n";
  out << "  \"H\": ";
  write_matrix(out, model.H);
  out << ",\n  \"V\": ";
  write_matrix(out, model.V);
  out << "\n}\n";
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  save_model(out, model);
  if (!out) throw std::runtime_error("failed writing model file '" + path + "'");
}

Model load_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed model JSON: ") + e.what());
  }
  try {
    Model model;
    model.kind = parse_model_kind(j.at("kind").get<std::string>());
    model.loss = parse_loss(j.at("loss").get<std::string>());
    model.penalty = parse_penalty(j.at("penalty").get<std::string>());
    model.lambda = j.at("lambda").get<double>();
    const auto d = j.at("d").get<Eigen::Index>();
    const auto m = j.at("m").get<Eigen::Index>();
    const auto k = j.at("k").get<Eigen::Index>();
    model.label_map = j.at("label_map").get<std::vector<double>>();
    model.bias_augmented = j.at("bias_augmented").get<bool>();
    model.H = read_matrix(j.at("H"), k, d, "H");
    model.V = read_matrix(j.at("V"), k, m, "V");
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("invalid model file: ") + e.what());
  }
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  return load_model(in);
}

std::string file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

}  // namespace polyfactor
