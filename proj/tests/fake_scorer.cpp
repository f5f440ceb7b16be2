// Test plugin for the subprocess scorer protocol.
//
//   fake_scorer overlap   score = token Jaccard of a and b; replies in
//                         reverse order within each group of 4 requests
//   fake_scorer const V   every score is V (may be out of range)
//   fake_scorer text      replies with a non-numeric score
//   fake_scorer hang      reads requests and never replies
//   fake_scorer die       exits after the first request

#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace {

double jaccard(const std::string& a, const std::string& b) {
  std::set<std::string> sa, sb;
  std::istringstream ia(a), ib(b);
  for (std::string w; ia >> w;) sa.insert(w);
  for (std::string w; ib >> w;) sb.insert(w);
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& w : sa) inter += sb.count(w);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  const std::string mode = argc > 1 ? argv[1] : "overlap";
  std::vector<nlohmann::json> held;
  std::string line;
  auto flush = [&] {
    for (auto it = held.rbegin(); it != held.rend(); ++it) std::cout << it->dump() << '\n';
    std::cout.flush();
    held.clear();
  };

  while (std::getline(std::cin, line)) {
    const auto req = nlohmann::json::parse(line);
    const auto id = req.at("id").get<long long>();
    if (mode == "hang") continue;
    if (mode == "die") return 3;
    nlohmann::json reply = {{"id", id}};
    if (mode == "const") {
      reply["score"] = std::atof(argv[2]);
    } else if (mode == "text") {
      reply["score"] = "high";
    } else {
      reply["score"] = jaccard(req.at("a").get<std::string>(), req.at("b").get<std::string>());
    }
    held.push_back(reply);
    // Without more buffered input, answer now so single requests complete.
    if (held.size() == 4 || std::cin.rdbuf()->in_avail() == 0) flush();
  }
  flush();
  return 0;
}
