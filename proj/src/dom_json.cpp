#include <string>

#include "webnav/dom.hpp"
#include "webnav/util.hpp"

namespace webnav {

using nlohmann::json;

json dom_to_json(const DomNode& node) {
  json j;
  j["tag"] = node.tag;
  j["ref"] = node.ref;
  j["attrs"] = json::object();
  for (const auto& [k, v] : node.attrs) j["attrs"][k] = v;
  j["text"] = node.text;
  j["value"] = node.value;
  json flags = json::array();
  if (node.flags.checked) flags.push_back("checked");
  if (node.flags.selected) flags.push_back("selected");
  if (node.flags.focused) flags.push_back("focused");
  j["flags"] = flags;
  j["bbox"] = {node.bbox.x, node.bbox.y, node.bbox.w, node.bbox.h};
  json children = json::array();
  for (const DomNode& c : node.children) children.push_back(dom_to_json(c));
  j["children"] = std::move(children);
  return j;
}

DomNode dom_from_json(const json& j, const std::string& where) {
  auto fail = [&](const std::string& field, const std::string& why) -> ParseError {
    return ParseError(where + "." + field + ": " + why);
  };
  if (!j.is_object()) throw ParseError(where + ": expected object");
  DomNode n;
  if (!j.contains("tag") || !j["tag"].is_string() || j["tag"].get<std::string>().empty()) {
    throw fail("tag", "missing or empty");
  }
  n.tag = j["tag"].get<std::string>();
  if (j.contains("ref")) {
    if (!j["ref"].is_number_integer()) throw fail("ref", "expected integer");
    n.ref = j["ref"].get<int>();
  }
  if (j.contains("attrs")) {
    if (!j["attrs"].is_object()) throw fail("attrs", "expected object");
    for (const auto& [k, v] : j["attrs"].items()) {
      if (!v.is_string()) throw fail("attrs." + k, "expected string");
      n.attrs[k] = v.get<std::string>();
    }
  }
  for (const char* key : {"text", "value"}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_string()) throw fail(key, "expected string");
    (std::string(key) == "text" ? n.text : n.value) = j[key].get<std::string>();
  }
  if (j.contains("flags")) {
    if (!j["flags"].is_array()) throw fail("flags", "expected array");
    for (const json& f : j["flags"]) {
      const std::string s = f.is_string() ? f.get<std::string>() : "";
      if (s == "checked") n.flags.checked = true;
      else if (s == "selected") n.flags.selected = true;
      else if (s == "focused") n.flags.focused = true;
      else throw fail("flags", "unknown flag " + f.dump());
    }
  }
  if (j.contains("bbox")) {
    const json& b = j["bbox"];
    if (!b.is_array() || b.size() != 4) throw fail("bbox", "expected [x,y,w,h]");
    for (const json& v : b) {
      if (!v.is_number_integer()) throw fail("bbox", "expected integers");
    }
    n.bbox = {b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
  }
  if (j.contains("children")) {
    if (!j["children"].is_array()) throw fail("children", "expected array");
    for (std::size_t i = 0; i < j["children"].size(); ++i) {
      n.children.push_back(
          dom_from_json(j["children"][i], where + ".children[" + std::to_string(i) + "]"));
    }
  }
  return n;
}

}  // namespace webnav
