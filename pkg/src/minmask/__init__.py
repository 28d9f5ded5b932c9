"""Min Mask Sketch - probabilistic storage for data-sharing policy bitmasks."""
