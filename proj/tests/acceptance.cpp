// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <cstring>
#include <iostream>

#include "persist/validate.hpp"

int main(int argc, char** argv) {
    const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    persist::Validator v;
    int failed = 0;
    v.run(quick ? persist::ValidationLevel::quick : persist::ValidationLevel::full,
          [&](const persist::CriterionResult& r) {
              std::cout << persist::format_result(r) << std::endl;
              failed += !r.pass;
          });
    std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : std::string("acceptance: all criteria passed"))
              << std::endl;
    return failed ? 1 : 0;
}
