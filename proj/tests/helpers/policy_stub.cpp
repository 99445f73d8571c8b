// Minimal external policy for wire-protocol tests: newline-delimited JSON
// requests on stdin, one {"text": ...} response per line on stdout.
//
//   --sleep=<seconds>  delay before every reply (drives the timeout path)
//   --garbage          reply with non-JSON noise
//   --quiet            never reply at all

#include <json.hpp>

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

using nlohmann::json;

int main(int argc, char** argv) {
  double sleep_s = 0;
  bool garbage = false, quiet = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.rfind("--sleep=", 0) == 0) sleep_s = std::stod(arg.substr(8));
    if (arg == "--garbage") garbage = true;
    if (arg == "--quiet") quiet = true;
  }

  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    if (sleep_s > 0)
      std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
    if (quiet) continue;
    if (garbage) {
      std::cout << "not json at all\n" << std::flush;
      continue;
    }
    json req = json::parse(line, nullptr, false);
    json reply;
    if (!req.is_discarded() && req.value("kind", "") == "propose") {
      if (req.value("mode", "") == "ind") {
        const size_t n = req["payload"].value("n_io", 6);
        json io_args = json::array();
        for (size_t t = 0; t < n; ++t)
          io_args.push_back({{"t", "str"}, {"v", t % 2 ? "building" : "road"}});
        reply = {{"q", "Is there an object of the given type?"}, {"io_args", io_args}};
      } else {
        reply = {{"q", "Is there a building?"},
                 {"p", "(exists (segment image arg))"},
                 {"a", {{"t", "str"}, {"v", "building"}}}};
      }
      std::cout << json{{"text", reply.dump()}}.dump() << "\n" << std::flush;
    } else {
      std::cout << json{{"text", "true"}}.dump() << "\n" << std::flush;
    }
  }
  return 0;
}
