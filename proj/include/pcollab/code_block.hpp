#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace pcollab {

struct FencedBlock {
  std::string info;  // text after the opening fence, e.g. "python"
  std::string code;
};

/// First ``` fenced block in `text`. An unterminated final fence runs to the
/// end of the text.
inline std::optional<FencedBlock> first_code_block(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto line_end = text.find('\n', open + 3);
  if (line_end == std::string_view::npos) return std::nullopt;
  FencedBlock block;
  block.info = std::string(text.substr(open + 3, line_end - open - 3));
  while (!block.info.empty() && (block.info.back() == ' ' || block.info.back() == '\r')) block.info.pop_back();
  while (!block.info.empty() && block.info.front() == ' ') block.info.erase(block.info.begin());
  const auto body = line_end + 1;
  const auto close = text.find("```", body);
  block.code = std::string(text.substr(body, close == std::string_view::npos ? text.size() - body : close - body));
  return block;
}

}  // namespace pcollab
