#include <catch2/catch_amalgamated.hpp>

#include "kinlab/geom.hpp"

using namespace kinlab;

TEST_CASE("placeholder: headers compile") { REQUIRE(make_domain("ball")->name() == "ball"); }
