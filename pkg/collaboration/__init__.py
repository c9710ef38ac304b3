"""D2D collaboration: mean-field model, simulator, offloading region and pricing controller."""
