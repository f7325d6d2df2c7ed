#pragma once

#include <json.hpp>
#include <string>

#include "spos/csv.hpp"

namespace spos {

using Json = nlohmann::ordered_json;

namespace detail {

inline void dump_json(const Json& node, std::string& out, int indent) {
  const std::string pad(2 * indent, ' ');
  const std::string pad_in(2 * (indent + 1), ' ');
  switch (node.type()) {
    case Json::value_t::object: {
      if (node.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = node.begin(); it != node.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in + Json(it.key()).dump() + ": ";
        dump_json(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (node.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : node) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        dump_json(item, out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float:
      out += format_double(node.get<double>());
      return;
    default:
      out += node.dump();
      return;
  }
}

}  // namespace detail

// nlohmann dump with every float rendered at 17 significant digits.
inline std::string dump_json_17g(const Json& document) {
  std::string out;
  detail::dump_json(document, out, 0);
  out += "\n";
  return out;
}

}  // namespace spos
