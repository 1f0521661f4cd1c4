from omega_orbits.cli.main import main

# e.g. python main.py omega-test --points "1:0,0:1,1:1" --s ""
main()
