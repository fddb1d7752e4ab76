#include "gwlimits/spec_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gwlimits {

namespace {

using nlohmann::json;

std::string line_context(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

long long parse_integer(const std::string& s) {
  long long value = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw Error(ErrorCode::ParseError, "invalid integer '" + s + "'");
  return value;
}

}  // namespace

double parse_probability(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) throw Error(ErrorCode::ParseError, "empty probability");
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    const long long num = parse_integer(trim(std::string_view(s).substr(0, slash)));
    const long long den = parse_integer(trim(std::string_view(s).substr(slash + 1)));
    if (den == 0) throw Error(ErrorCode::ParseError, "zero denominator in '" + s + "'");
    return static_cast<double>(num) / static_cast<double>(den);
  }
  char* end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw Error(ErrorCode::ParseError, "invalid probability '" + s + "'");
  if (!std::isfinite(value)) throw Error(ErrorCode::ParseError, "non-finite probability '" + s + "'");
  return value;
}

ProcessSpec parse_process_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, line_context(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "process file must be a JSON object");
  if (!doc.contains("types") || !doc["types"].is_number_integer() || doc["types"].get<long long>() <= 0) {
    throw Error(ErrorCode::ParseError, "\"types\" must be a positive integer");
  }
  if (!doc.contains("rules") || !doc["rules"].is_array()) {
    throw Error(ErrorCode::ParseError, "\"rules\" must be an array");
  }
  const auto V = doc["types"].get<std::size_t>();
  std::vector<std::vector<OffspringRule>> rules(V);
  const auto& arr = doc["rules"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& r = arr[i];
    const std::string where = "rule index " + std::to_string(i);
    if (!r.is_object()) throw Error(ErrorCode::ParseError, where + ": expected an object");
    if (!r.contains("type") || !r["type"].is_number_integer()) {
      throw Error(ErrorCode::ParseError, where + ": missing integer \"type\"");
    }
    const auto type = r["type"].get<long long>();
    if (type < 1 || static_cast<std::size_t>(type) > V) {
      throw Error(ErrorCode::MalformedSpec, where + ": type " + std::to_string(type) + " outside 1.." + std::to_string(V));
    }
    if (!r.contains("offspring") || !r["offspring"].is_array()) {
      throw Error(ErrorCode::ParseError, where + ": missing \"offspring\" array");
    }
    if (r["offspring"].size() != V) {
      throw Error(ErrorCode::MalformedSpec, where + ": offspring vector has " + std::to_string(r["offspring"].size()) +
                                                " entries, expected " + std::to_string(V));
    }
    OffspringRule rule;
    for (const auto& c : r["offspring"]) {
      if (!c.is_number_integer() || c.get<long long>() < 0) {
        throw Error(ErrorCode::ParseError, where + ": offspring counts must be nonnegative integers");
      }
      rule.counts.push_back(c.get<std::uint32_t>());
    }
    if (!r.contains("prob")) throw Error(ErrorCode::ParseError, where + ": missing \"prob\"");
    const auto& p = r["prob"];
    try {
      if (p.is_number()) {
        rule.prob = p.get<double>();
      } else if (p.is_string()) {
        rule.prob = parse_probability(p.get<std::string>());
      } else {
        throw Error(ErrorCode::ParseError, "\"prob\" must be a number or string");
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::NotAProbability, where + ": " + e.detail());
    }
    if (!(rule.prob >= 0.0 && rule.prob <= 1.0)) {
      throw Error(ErrorCode::NotAProbability, where + ": probability " + std::to_string(rule.prob) + " outside [0,1]");
    }
    rules[static_cast<std::size_t>(type - 1)].push_back(std::move(rule));
  }
  return ProcessSpec(V, std::move(rules));
}

ProcessSpec load_process_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open process file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_process_json(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string process_to_json(const ProcessSpec& spec) {
  json doc;
  doc["types"] = spec.num_types();
  doc["rules"] = json::array();
  for (std::size_t k = 0; k < spec.num_types(); ++k)
    for (const auto& rule : spec.rules(k))
      doc["rules"].push_back({{"type", k + 1}, {"offspring", rule.counts}, {"prob", rule.prob}});
  return doc.dump(2);
}

}  // namespace gwlimits
