#include <doctest.h>

#include "properties.hpp"

TEST_SUITE("properties") {
  TEST_CASE("every invariant holds on seeded cases") {
    for (const props::PropertyOutcome& o : props::run_all_properties(20261015, 100)) {
      CAPTURE(o.name);
      CAPTURE(o.first_failure);
      CHECK(o.cases >= 100);
      CHECK(o.failures == 0);
    }
  }
}
