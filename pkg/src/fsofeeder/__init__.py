"""Monte Carlo simulator and analysis toolkit for a 54-channel DWDM
free-space optical feeder-link trial."""

__version__ = "0.1.0"
