#pragma once

namespace crawl {

/// One crawl interval as observed by the crawler: how long it lasted, how
/// many CIS arrived during it, and whether the content had changed when the
/// crawl fetched it.
struct IntervalObservation {
  double tau_elap = 0.0;
  int n_cis = 0;
  int z = 0;  ///< 1 if the content differed at the crawl
};

}  // namespace crawl
