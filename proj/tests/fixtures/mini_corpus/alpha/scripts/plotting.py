import matplotlib.pyplot as plt
from matplotlib import colors as mcolors
import xml.etree.ElementTree


def draw(values):
    fig, ax = plt.subplots()
    ax.plot(values, color=mcolors.to_hex("red"))
    tree = xml.etree.ElementTree.parse("a.xml")
    plt.savefig("out.png")
    return fig, tree
