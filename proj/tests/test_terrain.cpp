#include <gtest/gtest.h>
#include "anl/terrain.hpp"
TEST(Smoke, Flat) {
    anl::TerrainGrid g(9, 9, 0.5);
    EXPECT_DOUBLE_EQ(anl::height_at(g, 1.0, 1.0), 0.0);
}
