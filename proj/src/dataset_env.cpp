#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <boost/tokenizer.hpp>

#include "pgcr/envs.hpp"

namespace pgcr {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  boost::escaped_list_separator<char> sep('\\', ',', '"');
  boost::tokenizer<boost::escaped_list_separator<char>> tok(line, sep);
  std::vector<std::string> out;
  for (const auto& field : tok) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& text, const std::string& column, std::size_t line) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line) + ": column '" + column + "' holds non-numeric value '" +
                         text + "'",
                     line);
  return v;
}

}  // namespace

std::size_t categorical_bucket(const std::string& column, const std::string& value, std::size_t budget) {
  if (budget == 0) throw std::invalid_argument("hash budget must be positive");
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](unsigned char ch) {
    h ^= ch;
    h *= 1099511628211ULL;
  };
  for (char ch : column) mix(static_cast<unsigned char>(ch));
  mix('=');
  for (char ch : value) mix(static_cast<unsigned char>(ch));
  return static_cast<std::size_t>(h % budget);
}

std::vector<DatasetRow> parse_dataset(std::istream& in, const DatasetSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw SchemaError("dataset has no header row");
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column.emplace(header[i], i);
  auto find = [&](const std::string& name) {
    const auto it = column.find(name);
    if (it == column.end()) throw SchemaError("dataset is missing column '" + name + "'");
    return it->second;
  };
  const std::size_t user_col = find(schema.user_column);
  const std::size_t label_col = find(schema.label_column);
  std::vector<std::size_t> numeric, categorical;
  for (const auto& c : schema.numeric_columns) numeric.push_back(find(c));
  for (const auto& c : schema.categorical_columns) categorical.push_back(find(c));
  const std::size_t budget = schema.categorical_columns.empty() ? 0 : schema.hash_budget;
  if (!schema.categorical_columns.empty() && budget == 0)
    throw SchemaError("categorical columns need a positive hash budget");
  const auto dim = static_cast<Eigen::Index>(numeric.size() + budget);
  if (dim == 0) throw SchemaError("dataset schema names no feature columns");

  std::vector<DatasetRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(fields.size()),
                       line_no);
    DatasetRow row;
    row.user = fields[user_col];
    row.label = parse_number(fields[label_col], schema.label_column, line_no);
    row.features = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < numeric.size(); ++i)
      row.features[static_cast<Eigen::Index>(i)] =
          parse_number(fields[numeric[i]], schema.numeric_columns[i], line_no);
    for (std::size_t i = 0; i < categorical.size(); ++i) {
      const auto b = categorical_bucket(schema.categorical_columns[i], fields[categorical[i]], budget);
      row.features[static_cast<Eigen::Index>(numeric.size() + b)] += 1.0;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError("no data rows");
  return rows;
}

std::unique_ptr<DatasetEnv> load_dataset_env(const std::string& path, const DatasetSchema& schema,
                                             std::size_t candidates, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return std::make_unique<DatasetEnv>(parse_dataset(in, schema), candidates, seed);
}

DatasetEnv::DatasetEnv(std::vector<DatasetRow> rows, std::size_t candidates, std::uint64_t seed)
    : rows_(std::move(rows)), m_(candidates), rng_(make_rng(seed, 1)) {
  if (rows_.empty()) throw SchemaError("no data rows");
  if (m_ == 0) throw std::invalid_argument("dataset env: candidate count must be positive");
  dim_ = static_cast<std::size_t>(rows_.front().features.size());
  // Users in order of first appearance keep the stream independent of hashing.
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto [it, fresh] = slot.emplace(rows_[i].user, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  for (auto& g : groups) {
    if (g.size() >= m_) users_.push_back(std::move(g));
    else ++excluded_users_;
  }
  if (users_.empty())
    throw SchemaError("no user has at least " + std::to_string(m_) + " rows");
}

void DatasetEnv::draw() {
  std::uniform_int_distribution<std::size_t> pick_user(0, users_.size() - 1);
  auto pool = users_[pick_user(rng_)];
  served_.clear();
  CandidateSet c(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(m_));
  for (std::size_t j = 0; j < m_; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
    std::swap(pool[j], pool[pick(rng_)]);
    served_.push_back(pool[j]);
    c.col(static_cast<Eigen::Index>(j)) = rows_[pool[j]].features;
  }
  current_ = std::make_shared<const Observation>(Observation{Eigen::VectorXd(0), std::move(c)});
}

std::shared_ptr<const Observation> DatasetEnv::reset() {
  draw();
  return current_;
}

std::shared_ptr<const Observation> DatasetEnv::current() const {
  if (!current_) throw InvalidStateError("dataset env: reset has not been called");
  return current_;
}

Eigen::VectorXd DatasetEnv::oracle_means() const {
  current();
  Eigen::VectorXd out(static_cast<Eigen::Index>(m_));
  for (std::size_t j = 0; j < m_; ++j) out[static_cast<Eigen::Index>(j)] = rows_[served_[j]].label;
  return out;
}

EnvStep DatasetEnv::step(std::size_t action) {
  current();
  if (action >= m_) throw std::invalid_argument("dataset env: action out of range");
  const double r = rows_[served_[action]].label;
  draw();
  return {r, false};
}

}  // namespace pgcr
