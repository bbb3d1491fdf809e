#include "spincat/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace spincat {

std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nlohmann::json state_to_json(const SpinState& s) {
  nlohmann::json amps = nlohmann::json::array();
  for (int k = 0; k < s.amps.size(); ++k)
    amps.push_back({s.amps[k].real(), s.amps[k].imag()});
  return {{"J", std::to_string(s.j.spin_count()) + "/2"}, {"amps", std::move(amps)}};
}

SpinState state_from_json(const nlohmann::json& j) {
  const std::string enc = j.at("J").get<std::string>();
  const auto slash = enc.find('/');
  if (slash == std::string::npos || enc.substr(slash) != "/2")
    throw std::invalid_argument("state_from_json: J must be encoded as \"<2J>/2\"");
  const int two_j = std::stoi(enc.substr(0, slash));
  const auto& amps = j.at("amps");
  if (static_cast<int>(amps.size()) != two_j + 1)
    throw std::invalid_argument("state_from_json: amplitude count does not match J");
  CVector v(two_j + 1);
  for (int k = 0; k <= two_j; ++k)
    v[k] = Complex(amps[k][0].get<double>(), amps[k][1].get<double>());
  return SpinState(TotalSpin(two_j), std::move(v));
}

void CsvWriter::comment(const std::string& key, const std::string& value) {
  comments_.emplace_back(key, value);
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_.size()) throw std::invalid_argument("CsvWriter: column count mismatch");
  std::vector<std::string> r;
  r.reserve(values.size());
  for (double v : values) r.push_back(fmt_double(v));
  rows_.push_back(std::move(r));
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
  if (values.size() != columns_.size()) throw std::invalid_argument("CsvWriter: column count mismatch");
  rows_.push_back(values);
}

std::string CsvWriter::str() const {
  std::ostringstream os;
  for (const auto& [k, v] : comments_) os << "# " << k << "=" << v << "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
  os << "\n";
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  return os.str();
}

void CsvWriter::write(const std::filesystem::path& path) const { write_text(path, str()); }

nlohmann::json CsvWriter::json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rows_) {
    nlohmann::json obj;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      double v = 0.0;
      auto res = std::from_chars(r[i].data(), r[i].data() + r[i].size(), v);
      if (res.ec == std::errc() && res.ptr == r[i].data() + r[i].size())
        obj[columns_[i]] = v;
      else
        obj[columns_[i]] = r[i];
    }
    rows.push_back(std::move(obj));
  }
  nlohmann::json meta;
  for (const auto& [k, v] : comments_) meta[k] = v;
  return {{"meta", std::move(meta)}, {"rows", std::move(rows)}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace spincat
