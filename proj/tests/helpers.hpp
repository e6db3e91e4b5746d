#pragma once

#include <string>
#include <vector>

#include "loopsoup/loop_soup.hpp"

namespace testing {

inline loopsoup::Loop loop_of(loopsoup::Point root, const std::string& dirs, double arrival = 0.0) {
  loopsoup::Loop l;
  l.root = root;
  l.arrival = arrival;
  for (char c : dirs) l.steps.push_back(loopsoup::dir_from_char(c));
  return l;
}

inline loopsoup::LoopSoup soup_of(const loopsoup::LatticeDomain& d, std::vector<loopsoup::Loop> loops) {
  loopsoup::LoopSoup s;
  s.domain = d;
  s.loops = std::move(loops);
  s.intensity_c = 1.0;
  s.max_len = 64;
  return s;
}

}  // namespace testing
