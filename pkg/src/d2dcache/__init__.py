"""Cost-optimal segment caching for mobile D2D networks under Poisson contacts."""
